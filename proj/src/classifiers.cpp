#include "hatebench/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <numbers>
#include <ostream>

#include "hatebench/rng.hpp"

namespace hatebench::classifiers {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void check_training_input(const FeatureMatrix& x, std::span<const Label> y, std::string_view who) {
  if (x.rows() != y.size()) {
    throw Error(std::string(who) + ": " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) +
                " labels");
  }
  if (x.rows() == 0) throw Error(std::string(who) + ": no training rows");
  require_finite(x, who);
}

void check_width(std::size_t expected, const FeatureMatrix& x) {
  if (x.cols() != expected) {
    throw Error("model expects " + std::to_string(expected) + " features, matrix has " + std::to_string(x.cols()));
  }
}

std::array<std::size_t, 2> class_counts(std::span<const Label> y) {
  std::array<std::size_t, 2> c{0, 0};
  for (const Label l : y) ++c[l == Label::Hate ? 1 : 0];
  return c;
}

}  // namespace

// ------------------------------------------------------- logistic regression

void standardization(const FeatureMatrix& x, std::vector<double>& mean, std::vector<double>& scale) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  mean.assign(d, 0.0);
  scale.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - mean[j];
      scale[j] += dev * dev;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
}

namespace {

FeatureMatrix standardize(const FeatureMatrix& x, const std::vector<double>& mean, const std::vector<double>& scale) {
  FeatureMatrix z(x.row_ids(), x.column_labels());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r);
    auto dst = z.row(r);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - mean[j]) / scale[j];
  }
  return z;
}

}  // namespace

LRGradient lr_loss_grad(const FeatureMatrix& z, std::span<const Label> y, std::span<const double> weights,
                        double bias, double l2) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  LRGradient g;
  g.d_weights.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = z.row(r);
    double f = bias;
    for (std::size_t j = 0; j < d; ++j) f += weights[j] * row[j];
    const double target = label_value(y[r]);
    g.loss += target > 0.5 ? softplus(-f) : softplus(f);
    const double err = sigmoid(f) - target;
    g.d_bias += err;
    for (std::size_t j = 0; j < d; ++j) g.d_weights[j] += err * row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  g.loss *= inv_n;
  g.d_bias *= inv_n;
  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    g.d_weights[j] = g.d_weights[j] * inv_n + l2 * weights[j];
    norm2 += weights[j] * weights[j];
  }
  g.loss += 0.5 * l2 * norm2;
  return g;
}

LRModel lr_fit(const FeatureMatrix& x, std::span<const Label> y, const LRParams& params) {
  check_training_input(x, y, "lr_fit");
  if (x.rows() < 2) throw Error("lr_fit: need at least 2 rows");
  const auto counts = class_counts(y);
  if (counts[0] == 0 || counts[1] == 0) throw Error("lr_fit: training data contains a single class");

  LRModel model;
  standardization(x, model.mean, model.scale);
  const FeatureMatrix z = standardize(x, model.mean, model.scale);
  model.weights.assign(x.cols(), 0.0);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    const LRGradient g = lr_loss_grad(z, y, model.weights, model.bias, params.l2);
    if (!std::isfinite(g.loss)) throw Error("lr_fit: loss is not finite at epoch " + std::to_string(epoch));
    for (std::size_t j = 0; j < model.weights.size(); ++j) model.weights[j] -= params.learning_rate * g.d_weights[j];
    model.bias -= params.learning_rate * g.d_bias;
  }
  return model;
}

std::vector<double> lr_predict_proba(const LRModel& model, const FeatureMatrix& x) {
  check_width(model.width(), x);
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double f = model.bias;
    for (std::size_t j = 0; j < row.size(); ++j) f += model.weights[j] * ((row[j] - model.mean[j]) / model.scale[j]);
    p[r] = sigmoid(f);
  }
  return p;
}

std::vector<Label> lr_predict(const LRModel& model, const FeatureMatrix& x, double threshold) {
  std::vector<Label> out;
  for (const double p : lr_predict_proba(model, x)) out.push_back(p >= threshold ? Label::Hate : Label::NonHate);
  return out;
}

// ------------------------------------------------------------ decision tree

std::size_t DTModel::internal_nodes() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const DTNode& n) {
    return !n.is_leaf();
  }));
}

namespace {

std::size_t ceil_sqrt(std::size_t d) {
  auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  while (k * k < d) ++k;
  while (k > 0 && (k - 1) * (k - 1) >= d) --k;
  return k;
}

double midpoint(double a, double b) {
  const double t = a + (b - a) / 2.0;
  return (t >= a && t < b) ? t : a;
}

// Split search with exact integer arithmetic. For a partition into L and R
// the weighted Gini impurity is 1 - S/n with
//   S = (L0^2 + L1^2)/nL + (R0^2 + R1^2)/nR,
// so maximizing the decrease means maximizing S = num/den,
//   num = (L0^2 + L1^2)*nR + (R0^2 + R1^2)*nL,  den = nL*nR.
__extension__ using i128 = __int128;

struct Ratio {
  i128 num = 0;
  i128 den = 1;
  bool greater_than(const Ratio& o) const { return num * o.den > o.num * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const Label> y, const DTParams& params)
      : n_(x.rows()), d_(x.cols()), params_(params), columns_(x.rows() * x.cols()), labels_(x.rows()) {
    for (std::size_t r = 0; r < n_; ++r) {
      const auto row = x.row(r);
      for (std::size_t j = 0; j < d_; ++j) columns_[j * n_ + r] = row[j];
      labels_[r] = y[r] == Label::Hate ? 1 : 0;
    }
  }

  // rng == nullptr: every feature is a candidate at every split.
  DTModel build(std::vector<std::uint32_t> rows, SplitMix64* rng, std::size_t k_features) {
    DTModel model;
    model.width = d_;
    struct Task {
      std::size_t node;
      std::vector<std::uint32_t> rows;
      std::size_t depth;
    };
    std::vector<Task> stack;
    model.nodes.emplace_back();
    stack.push_back({0, std::move(rows), 0});
    std::vector<std::size_t> pool(d_);
    for (std::size_t j = 0; j < d_; ++j) pool[j] = j;

    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      std::size_t c1 = 0;
      for (const auto r : task.rows) c1 += labels_[r];
      const std::size_t c0 = task.rows.size() - c1;
      DTNode& node = model.nodes[task.node];
      node.count_nonhate = c0;
      node.count_hate = c1;
      node.label = c1 > c0 ? Label::Hate : Label::NonHate;

      const bool stop = c0 == 0 || c1 == 0 || task.depth >= params_.max_depth ||
                        task.rows.size() < params_.min_samples_split;
      if (stop) continue;
      const Split split = best_split(task.rows, c0, c1, rng, k_features, pool);
      if (split.feature < 0) continue;

      std::vector<std::uint32_t> left;
      std::vector<std::uint32_t> right;
      const double* col = columns_.data() + static_cast<std::size_t>(split.feature) * n_;
      for (const auto r : task.rows) (col[r] <= split.threshold ? left : right).push_back(r);

      const std::size_t left_id = model.nodes.size();
      model.nodes.emplace_back();
      model.nodes.emplace_back();
      DTNode& parent = model.nodes[task.node];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left_id;
      parent.right = left_id + 1;
      stack.push_back({left_id + 1, std::move(right), task.depth + 1});
      stack.push_back({left_id, std::move(left), task.depth + 1});
    }
    return model;
  }

  std::size_t rows() const { return n_; }
  std::size_t width() const { return d_; }

 private:
  // Candidate features: all of them, or a random subset of k sorted
  // ascending. When none of the k yields a split, further features are drawn
  // one at a time until one does or the pool is exhausted.
  Split best_split(const std::vector<std::uint32_t>& rows, std::size_t c0, std::size_t c1, SplitMix64* rng,
                   std::size_t k, std::vector<std::size_t>& pool) {
    const auto n = static_cast<i128>(rows.size());
    Ratio parent{static_cast<i128>(c0) * c0 + static_cast<i128>(c1) * c1, n};
    Ratio best = parent;
    Split split;

    if (rng == nullptr) {
      for (std::size_t f = 0; f < d_; ++f) consider(f, rows, c0, c1, best, split);
    } else {
      const std::size_t first = std::min(k, d_);
      for (std::size_t i = 0; i < first; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng->below(d_ - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<std::size_t> subset(pool.begin(), pool.begin() + static_cast<long>(first));
      std::sort(subset.begin(), subset.end());
      for (const std::size_t f : subset) consider(f, rows, c0, c1, best, split);
      for (std::size_t i = first; i < d_ && split.feature < 0; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng->below(d_ - i));
        std::swap(pool[i], pool[j]);
        consider(pool[i], rows, c0, c1, best, split);
      }
    }
    if (split.feature >= 0 && params_.min_impurity_decrease > 0.0) {
      const double decrease = (best.value() - parent.value()) / static_cast<double>(rows.size());
      if (decrease < params_.min_impurity_decrease) return {};
    }
    return split;
  }

  void consider(std::size_t f, const std::vector<std::uint32_t>& rows, std::size_t c0, std::size_t c1, Ratio& best,
                Split& split) {
    const double* col = columns_.data() + f * n_;
    scratch_.clear();
    for (const auto r : rows) scratch_.emplace_back(col[r], labels_[r]);
    std::sort(scratch_.begin(), scratch_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (scratch_.front().first == scratch_.back().first) return;
    i128 l0 = 0;
    i128 l1 = 0;
    const i128 m = static_cast<i128>(scratch_.size());
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      (scratch_[i].second ? l1 : l0) += 1;
      if (scratch_[i].first == scratch_[i + 1].first) continue;
      const i128 nl = static_cast<i128>(i + 1);
      const i128 nr = m - nl;
      const i128 r0 = static_cast<i128>(c0) - l0;
      const i128 r1 = static_cast<i128>(c1) - l1;
      const Ratio s{(l0 * l0 + l1 * l1) * nr + (r0 * r0 + r1 * r1) * nl, nl * nr};
      // The first valid threshold is taken even at zero gain, so impure
      // nodes like XOR still split.
      if (split.feature < 0 || s.greater_than(best)) {
        best = s;
        split.feature = static_cast<int>(f);
        split.threshold = midpoint(scratch_[i].first, scratch_[i + 1].first);
      }
    }
  }

  std::size_t n_;
  std::size_t d_;
  DTParams params_;
  std::vector<double> columns_;  // column-major copy of x
  std::vector<std::uint8_t> labels_;
  std::vector<std::pair<double, std::uint8_t>> scratch_;
};

const DTNode& route(const DTModel& model, std::span<const double> row) {
  std::size_t i = 0;
  while (!model.nodes[i].is_leaf()) {
    const DTNode& n = model.nodes[i];
    i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return model.nodes[i];
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

}  // namespace

DTModel dt_fit(const FeatureMatrix& x, std::span<const Label> y, const DTParams& params) {
  check_training_input(x, y, "dt_fit");
  TreeBuilder builder(x, y, params);
  return builder.build(all_rows(x.rows()), nullptr, 0);
}

std::vector<Label> dt_predict(const DTModel& model, const FeatureMatrix& x) {
  check_width(model.width, x);
  std::vector<Label> out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(route(model, x.row(r)).label);
  return out;
}

std::vector<double> dt_predict_proba(const DTModel& model, const FeatureMatrix& x) {
  check_width(model.width, x);
  std::vector<double> out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const DTNode& leaf = route(model, x.row(r));
    out.push_back(static_cast<double>(leaf.count_hate) /
                  static_cast<double>(std::max<std::size_t>(1, leaf.count_hate + leaf.count_nonhate)));
  }
  return out;
}

// ------------------------------------------------------------ random forest

RFModel rf_fit(const FeatureMatrix& x, std::span<const Label> y, const RFParams& params) {
  check_training_input(x, y, "rf_fit");
  if (params.n_trees < 1) throw Error("rf_fit: n_trees must be >= 1");
  RFModel model;
  model.width = x.cols();
  model.max_features = params.max_features;
  model.trees.resize(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    model.tree_seeds.push_back(SplitMix64::substream(params.seed, t).next());
  }
  const std::size_t k = params.max_features == MaxFeatures::Sqrt ? ceil_sqrt(x.cols()) : x.cols();
  const std::size_t n = x.rows();

  auto grow = [&](TreeBuilder& builder, std::size_t t) {
    SplitMix64 rng(model.tree_seeds[t]);
    std::vector<std::uint32_t> rows;
    if (params.bootstrap) {
      rows.resize(n);
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n));
    } else {
      rows = all_rows(n);
    }
    const bool all = k >= x.cols();
    model.trees[t] = builder.build(std::move(rows), all ? nullptr : &rng, k);
  };

  const std::size_t threads = std::clamp<std::size_t>(params.threads, 1, params.n_trees);
  if (threads == 1) {
    TreeBuilder builder(x, y, params.tree);
    for (std::size_t t = 0; t < params.n_trees; ++t) grow(builder, t);
  } else {
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        TreeBuilder builder(x, y, params.tree);
        for (std::size_t t = w; t < params.n_trees; t += threads) grow(builder, t);
      }));
    }
    for (auto& f : workers) f.get();
  }
  return model;
}

Label majority_vote(std::span<const Label> votes) {
  const auto c = class_counts(votes);
  return c[1] > c[0] ? Label::Hate : Label::NonHate;
}

std::vector<Label> rf_predict(const RFModel& model, const FeatureMatrix& x) {
  std::vector<Label> out;
  for (const double p : rf_predict_proba(model, x)) {
    // p > 0.5 exactly when Hate votes outnumber NonHate votes.
    out.push_back(p > 0.5 ? Label::Hate : Label::NonHate);
  }
  return out;
}

std::vector<double> rf_predict_proba(const RFModel& model, const FeatureMatrix& x) {
  check_width(model.width, x);
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::size_t hate = 0;
    for (const auto& tree : model.trees) hate += route(tree, x.row(r)).label == Label::Hate ? 1 : 0;
    out[r] = static_cast<double>(hate) / static_cast<double>(model.trees.size());
  }
  return out;
}

// -------------------------------------------------------------- naive Bayes

NBVariant resolve_variant(const FeatureMatrix& x) {
  for (const double v : x.values()) {
    if (!(v >= 0.0) || v != std::floor(v)) return NBVariant::Gaussian;
  }
  return NBVariant::Multinomial;
}

NBModel nb_fit(const FeatureMatrix& x, std::span<const Label> y, NBVariant variant) {
  check_training_input(x, y, "nb_fit");
  if (variant == NBVariant::Auto) variant = resolve_variant(x);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  NBModel model;
  model.variant = variant;
  model.width = d;
  const auto counts = class_counts(y);
  for (int c = 0; c < 2; ++c) model.prior[c] = static_cast<double>(counts[c]) / static_cast<double>(n);

  if (variant == NBVariant::Multinomial) {
    std::array<std::vector<double>, 2> sums{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = x.row(r);
      auto& s = sums[y[r] == Label::Hate ? 1 : 0];
      for (std::size_t j = 0; j < d; ++j) {
        if (row[j] < 0.0) throw Error("nb_fit: multinomial variant needs nonnegative features (row " +
                                      std::to_string(r) + ", column " + std::to_string(j) + ")");
        s[j] += row[j];
      }
    }
    for (int c = 0; c < 2; ++c) {
      double total = 0.0;
      for (const double v : sums[c]) total += v;
      model.rate[c].resize(d);
      for (std::size_t j = 0; j < d; ++j) model.rate[c][j] = (sums[c][j] + 1.0) / (total + static_cast<double>(d));
    }
    return model;
  }

  for (int c = 0; c < 2; ++c) {
    model.mean[c].assign(d, 0.0);
    model.variance[c].assign(d, 0.0);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    auto& m = model.mean[y[r] == Label::Hate ? 1 : 0];
    for (std::size_t j = 0; j < d; ++j) m[j] += row[j];
  }
  for (int c = 0; c < 2; ++c) {
    if (counts[c] == 0) continue;
    for (double& m : model.mean[c]) m /= static_cast<double>(counts[c]);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    const int c = y[r] == Label::Hate ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - model.mean[c][j];
      model.variance[c][j] += dev * dev;
    }
  }
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x.at(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dev = x.at(r, j) - mean;
      var += dev * dev;
    }
    max_var = std::max(max_var, var / static_cast<double>(n));
  }
  const double floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;
  for (int c = 0; c < 2; ++c) {
    for (double& v : model.variance[c]) {
      v = (counts[c] > 0 ? v / static_cast<double>(counts[c]) : 0.0) + floor;
    }
  }
  return model;
}

std::vector<std::array<double, 2>> nb_log_posterior(const NBModel& model, const FeatureMatrix& x) {
  check_width(model.width, x);
  std::vector<std::array<double, 2>> out(x.rows());
  const std::size_t d = model.width;
  if (model.variant == NBVariant::Multinomial) {
    std::array<std::vector<double>, 2> log_rate;
    for (int c = 0; c < 2; ++c) {
      for (const double r : model.rate[c]) log_rate[c].push_back(std::log(r));
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto row = x.row(r);
      for (int c = 0; c < 2; ++c) {
        double lp = std::log(model.prior[c]);
        for (std::size_t j = 0; j < d; ++j) {
          if (row[j] != 0.0) lp += row[j] * log_rate[c][j];
        }
        out[r][c] = lp;
      }
    }
    return out;
  }
  std::array<double, 2> norm{0.0, 0.0};
  for (int c = 0; c < 2; ++c) {
    for (const double v : model.variance[c]) norm[c] -= 0.5 * std::log(2.0 * std::numbers::pi * v);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (int c = 0; c < 2; ++c) {
      double lp = std::log(model.prior[c]) + norm[c];
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = row[j] - model.mean[c][j];
        lp -= dev * dev / (2.0 * model.variance[c][j]);
      }
      out[r][c] = lp;
    }
  }
  return out;
}

std::vector<Label> nb_predict(const NBModel& model, const FeatureMatrix& x) {
  std::vector<Label> out;
  for (const auto& lp : nb_log_posterior(model, x)) out.push_back(lp[1] > lp[0] ? Label::Hate : Label::NonHate);
  return out;
}

std::vector<double> nb_predict_proba(const NBModel& model, const FeatureMatrix& x) {
  std::vector<double> out;
  for (const auto& lp : nb_log_posterior(model, x)) {
    if (std::isinf(lp[0]) && std::isinf(lp[1])) {
      out.push_back(0.5);
    } else {
      out.push_back(sigmoid(lp[1] - lp[0]));
    }
  }
  return out;
}

// ---------------------------------------------------------- uniform access

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::LR: return "LR";
    case ClassifierKind::DT: return "DT";
    case ClassifierKind::RF: return "RF";
    case ClassifierKind::NB: return "NB";
  }
  return "?";
}

ClassifierKind parse_classifier(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "LR") return ClassifierKind::LR;
  if (upper == "DT") return ClassifierKind::DT;
  if (upper == "RF") return ClassifierKind::RF;
  if (upper == "NB") return ClassifierKind::NB;
  throw ConfigError("unknown classifier '" + std::string(name) + "' (expected LR, DT, RF or NB)");
}

ClassifierKind kind_of(const TrainedClassifier& model) { return static_cast<ClassifierKind>(model.index()); }

std::size_t width_of(const TrainedClassifier& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LRModel>) {
          return m.width();
        } else {
          return m.width;
        }
      },
      model);
}

TrainedClassifier fit(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y,
                      const ClassifierConfig& config) {
  switch (kind) {
    case ClassifierKind::LR: return lr_fit(x, y, config.lr);
    case ClassifierKind::DT: return dt_fit(x, y, config.dt);
    case ClassifierKind::RF: return rf_fit(x, y, config.rf);
    case ClassifierKind::NB: return nb_fit(x, y, config.nb);
  }
  throw Error("fit: unknown classifier kind");
}

std::vector<Label> predict(const TrainedClassifier& model, const FeatureMatrix& x) {
  return std::visit(
      [&](const auto& m) -> std::vector<Label> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LRModel>) return lr_predict(m, x);
        else if constexpr (std::is_same_v<T, DTModel>) return dt_predict(m, x);
        else if constexpr (std::is_same_v<T, RFModel>) return rf_predict(m, x);
        else return nb_predict(m, x);
      },
      model);
}

std::vector<double> predict_proba(const TrainedClassifier& model, const FeatureMatrix& x) {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LRModel>) return lr_predict_proba(m, x);
        else if constexpr (std::is_same_v<T, DTModel>) return dt_predict_proba(m, x);
        else if constexpr (std::is_same_v<T, RFModel>) return rf_predict_proba(m, x);
        else return nb_predict_proba(m, x);
      },
      model);
}

// ------------------------------------------------------------ serialization

namespace {

constexpr std::string_view kMagic = "hatebench-model v1";

void write_vector(std::ostream& out, std::string_view name, const std::vector<double>& v) {
  out << name << ' ' << v.size();
  for (const double x : v) out << ' ' << format_double(x);
  out << '\n';
}

void write_tree(std::ostream& out, const DTModel& tree) {
  out << "nodes " << tree.nodes.size() << '\n';
  for (const auto& n : tree.nodes) {
    out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
        << n.count_nonhate << ' ' << n.count_hate << ' ' << to_string(n.label) << '\n';
  }
}

std::string_view variant_name(NBVariant v) {
  switch (v) {
    case NBVariant::Gaussian: return "gaussian";
    case NBVariant::Multinomial: return "multinomial";
    case NBVariant::Auto: return "auto";
  }
  return "?";
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error("model file: unexpected end of input");
    return w;
  }
  void expect(std::string_view keyword) {
    const std::string w = word();
    if (w != keyword) throw Error("model file: expected '" + std::string(keyword) + "', found '" + w + "'");
  }
  std::size_t count() {
    const std::string w = word();
    if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("model file: expected a count, found '" + w + "'");
    }
    return std::stoull(w);
  }
  double number() { return parse_double(word()); }
  std::vector<double> vector(std::string_view name, std::size_t expected) {
    expect(name);
    const std::size_t n = count();
    if (n != expected) {
      throw Error("model file: '" + std::string(name) + "' has " + std::to_string(n) + " values, expected " +
                  std::to_string(expected));
    }
    std::vector<double> v(n);
    for (double& x : v) x = number();
    return v;
  }

  DTModel tree(std::size_t width) {
    DTModel t;
    t.width = width;
    expect("nodes");
    const std::size_t k = count();
    if (k == 0) throw Error("model file: tree without nodes");
    t.nodes.resize(k);
    for (auto& n : t.nodes) {
      n.feature = std::stoi(word());
      n.threshold = number();
      n.left = count();
      n.right = count();
      n.count_nonhate = count();
      n.count_hate = count();
      n.label = parse_label(word());
      if (!n.is_leaf()) {
        if (static_cast<std::size_t>(n.feature) >= width) throw Error("model file: split feature out of range");
        if (n.left == 0 || n.right == 0 || n.left >= k || n.right >= k) {
          throw Error("model file: internal node with an invalid child index");
        }
      }
    }
    return t;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_model(std::ostream& out, const TrainedClassifier& model) {
  out << kMagic << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LRModel>) {
          out << "kind lr\nwidth " << m.width() << '\n';
          write_vector(out, "mean", m.mean);
          write_vector(out, "scale", m.scale);
          write_vector(out, "weights", m.weights);
          out << "bias " << format_double(m.bias) << '\n';
        } else if constexpr (std::is_same_v<T, DTModel>) {
          out << "kind dt\nwidth " << m.width << '\n';
          write_tree(out, m);
        } else if constexpr (std::is_same_v<T, RFModel>) {
          out << "kind rf\nwidth " << m.width << "\nmax_features "
              << (m.max_features == MaxFeatures::Sqrt ? "sqrt" : "all") << "\ntrees " << m.trees.size() << '\n';
          for (std::size_t t = 0; t < m.trees.size(); ++t) {
            out << "tree " << m.tree_seeds[t] << '\n';
            write_tree(out, m.trees[t]);
          }
        } else {
          out << "kind nb\nvariant " << variant_name(m.variant) << "\nwidth " << m.width << "\nprior "
              << format_double(m.prior[0]) << ' ' << format_double(m.prior[1]) << '\n';
          if (m.variant == NBVariant::Multinomial) {
            write_vector(out, "rate0", m.rate[0]);
            write_vector(out, "rate1", m.rate[1]);
          } else {
            write_vector(out, "mean0", m.mean[0]);
            write_vector(out, "variance0", m.variance[0]);
            write_vector(out, "mean1", m.mean[1]);
            write_vector(out, "variance1", m.variance[1]);
          }
        }
      },
      model);
  out << "end\n";
}

TrainedClassifier load_model(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (!magic.empty() && magic.back() == '\r') magic.pop_back();
  if (magic != kMagic) throw Error("model file: missing '" + std::string(kMagic) + "' header");
  Reader r(in);
  r.expect("kind");
  const std::string kind = r.word();
  TrainedClassifier result;
  if (kind == "lr") {
    r.expect("width");
    const std::size_t d = r.count();
    LRModel m;
    m.mean = r.vector("mean", d);
    m.scale = r.vector("scale", d);
    m.weights = r.vector("weights", d);
    r.expect("bias");
    m.bias = r.number();
    result = std::move(m);
  } else if (kind == "dt") {
    r.expect("width");
    const std::size_t d = r.count();
    result = r.tree(d);
  } else if (kind == "rf") {
    r.expect("width");
    RFModel m;
    m.width = r.count();
    r.expect("max_features");
    const std::string mf = r.word();
    if (mf != "sqrt" && mf != "all") throw Error("model file: unknown max_features '" + mf + "'");
    m.max_features = mf == "sqrt" ? MaxFeatures::Sqrt : MaxFeatures::All;
    r.expect("trees");
    const std::size_t t = r.count();
    if (t == 0) throw Error("model file: forest without trees");
    for (std::size_t i = 0; i < t; ++i) {
      r.expect("tree");
      m.tree_seeds.push_back(std::stoull(r.word()));
      m.trees.push_back(r.tree(m.width));
    }
    result = std::move(m);
  } else if (kind == "nb") {
    NBModel m;
    r.expect("variant");
    const std::string v = r.word();
    if (v == "gaussian") {
      m.variant = NBVariant::Gaussian;
    } else if (v == "multinomial") {
      m.variant = NBVariant::Multinomial;
    } else {
      throw Error("model file: unknown naive Bayes variant '" + v + "'");
    }
    r.expect("width");
    m.width = r.count();
    r.expect("prior");
    m.prior[0] = r.number();
    m.prior[1] = r.number();
    if (m.variant == NBVariant::Multinomial) {
      m.rate[0] = r.vector("rate0", m.width);
      m.rate[1] = r.vector("rate1", m.width);
    } else {
      m.mean[0] = r.vector("mean0", m.width);
      m.variance[0] = r.vector("variance0", m.width);
      m.mean[1] = r.vector("mean1", m.width);
      m.variance[1] = r.vector("variance1", m.width);
    }
    result = std::move(m);
  } else {
    throw Error("model file: unknown kind '" + kind + "'");
  }
  r.expect("end");
  return result;
}

}  // namespace hatebench::classifiers
