#pragma once

// Central finite-difference checks shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hatebench/classifiers.hpp"
#include "hatebench/embeddings.hpp"
#include "hatebench/neural.hpp"
#include "hatebench/rng.hpp"

namespace hbtest {

struct GradReport {
  std::size_t coords = 0;
  double max_rel = 0.0;
  void add(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    ++coords;
  }
  void merge(const GradReport& o) {
    coords += o.coords;
    max_rel = std::max(max_rel, o.max_rel);
  }
};

inline std::vector<double> random_vec(hatebench::SplitMix64& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

template <class F>
double central(double& slot, double h, F&& loss) {
  const double saved = slot;
  slot = saved + h;
  const double up = loss();
  slot = saved - h;
  const double down = loss();
  slot = saved;
  return (up - down) / (2.0 * h);
}

// Skip-gram negative sampling: every coordinate of input, positive and negatives.
inline GradReport check_sgns(std::uint64_t seed, std::size_t instances, std::size_t dim, std::size_t k) {
  using namespace hatebench::embeddings;
  hatebench::SplitMix64 rng(seed);
  GradReport rep;
  for (std::size_t t = 0; t < instances; ++t) {
    auto input = random_vec(rng, dim, 0.8);
    auto pos = random_vec(rng, dim, 0.8);
    std::vector<std::vector<double>> negs;
    for (std::size_t j = 0; j < k; ++j) negs.push_back(random_vec(rng, dim, 0.8));
    auto loss = [&] {
      std::vector<std::span<const double>> ns(negs.begin(), negs.end());
      return sgns_loss_grad(input, pos, ns).loss;
    };
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    const auto g = sgns_loss_grad(input, pos, ns);
    for (std::size_t i = 0; i < dim; ++i) rep.add(g.d_input[i], central(input[i], 1e-5, loss));
    for (std::size_t i = 0; i < dim; ++i) rep.add(g.d_positive[i], central(pos[i], 1e-5, loss));
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < dim; ++i) rep.add(g.d_negatives[j][i], central(negs[j][i], 1e-5, loss));
    }
  }
  return rep;
}

// PV-DM: gradient with respect to the document vector.
inline GradReport check_pvdm(std::uint64_t seed, std::size_t instances, std::size_t dim) {
  using namespace hatebench::embeddings;
  hatebench::SplitMix64 rng(seed);
  GradReport rep;
  for (std::size_t t = 0; t < instances; ++t) {
    auto doc = random_vec(rng, dim, 0.8);
    std::vector<std::vector<double>> ctx;
    const std::size_t n_ctx = 1 + rng.below(4);
    for (std::size_t j = 0; j < n_ctx; ++j) ctx.push_back(random_vec(rng, dim, 0.8));
    const auto target = random_vec(rng, dim, 0.8);
    std::vector<std::vector<double>> negs;
    for (std::size_t j = 0; j < 3; ++j) negs.push_back(random_vec(rng, dim, 0.8));
    const std::vector<std::span<const double>> cs(ctx.begin(), ctx.end());
    const std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    auto loss = [&] { return pvdm_loss_grad(doc, cs, target, ns).loss; };
    const auto g = pvdm_loss_grad(doc, cs, target, ns);
    for (std::size_t i = 0; i < dim; ++i) rep.add(g.d_doc[i], central(doc[i], 1e-5, loss));
  }
  return rep;
}

// Logistic regression objective including the L2 term.
inline GradReport check_lr(std::uint64_t seed, std::size_t instances, std::size_t width) {
  using namespace hatebench;
  SplitMix64 rng(seed);
  GradReport rep;
  for (std::size_t t = 0; t < instances; ++t) {
    std::vector<std::vector<double>> rows;
    std::vector<Label> y;
    for (std::size_t r = 0; r < 25; ++r) {
      rows.push_back(random_vec(rng, width, 2.0));
      y.push_back(rng.below(2) ? Label::Hate : Label::NonHate);
    }
    const auto z = FeatureMatrix::from_rows(rows);
    auto w = random_vec(rng, width, 1.0);
    double b = rng.uniform(-1, 1);
    const double l2 = 0.05;
    auto loss = [&] { return classifiers::lr_loss_grad(z, y, w, b, l2).loss; };
    const auto g = classifiers::lr_loss_grad(z, y, w, b, l2);
    for (std::size_t i = 0; i < width; ++i) rep.add(g.d_weights[i], central(w[i], 1e-5, loss));
    rep.add(g.d_bias, central(b, 1e-5, loss));
  }
  return rep;
}

// Bidirectional recurrent model: every parameter including the embedding,
// on a 2-row batch with 3 steps (one row padded).
inline GradReport check_rnn(hatebench::neural::CellKind kind, std::uint64_t seed) {
  using namespace hatebench;
  using namespace hatebench::neural;
  RNNHyper hyper;
  hyper.hidden = 3;
  hyper.max_len = 3;
  hyper.seed = seed;
  RNNModel model = init_model(kind, hyper, {"a", "b", "c", "d"}, nullptr, 4);
  // Move away from the small symmetric initialisation so every path matters.
  SplitMix64 rng(seed ^ 0x5eedULL);
  for (auto& view : parameter_views(model.params, true)) {
    for (double& v : view.values) v += rng.uniform(-0.5, 0.5);
  }
  std::vector<textprep::TokenSequence> docs(2);
  docs[0].tokens = {"a", "zzz", "c"};
  docs[1].tokens = {"d", "b"};
  const std::vector<Label> labels{Label::Hate, Label::NonHate};
  const SequenceBatch batch = make_batch(docs, model.index, 3, labels);

  LossGradient lg = loss_and_gradient(model, batch);
  auto analytic = parameter_views(lg.grad, true);
  auto params = parameter_views(model.params, true);
  GradReport rep;
  auto loss = [&] { return dataset_loss(model, batch); };
  for (std::size_t v = 0; v < params.size(); ++v) {
    for (std::size_t i = 0; i < params[v].values.size(); ++i) {
      rep.add(analytic[v].values[i], central(params[v].values[i], 1e-5, loss));
    }
  }
  return rep;
}

}  // namespace hbtest
