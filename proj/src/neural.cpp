#include "hatebench/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "hatebench/rng.hpp"

namespace hatebench::neural {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Vector sigmoid(const Vector& a) { return a.unaryExpr([](double v) { return sigmoid(v); }); }

void fill_uniform(double* data, std::size_t n, double half, SplitMix64& rng) {
  for (std::size_t i = 0; i < n; ++i) data[i] = rng.uniform(-half, half);
}

}  // namespace

std::string_view to_string(CellKind kind) { return kind == CellKind::Gru ? "gru" : "lstm"; }

CellKind parse_cell(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "gru") return CellKind::Gru;
  if (lower == "lstm") return CellKind::Lstm;
  throw ConfigError("unknown recurrent cell '" + std::string(name) + "' (expected gru or lstm)");
}

std::size_t gate_count(CellKind kind) { return kind == CellKind::Gru ? 3 : 4; }

CellParams zero_cell(CellKind kind, std::size_t input, std::size_t hidden) {
  const auto g = static_cast<Eigen::Index>(gate_count(kind) * hidden);
  return {Matrix::Zero(g, static_cast<Eigen::Index>(input)), Matrix::Zero(g, static_cast<Eigen::Index>(hidden)),
          Vector::Zero(g)};
}

CellState zero_state(CellKind kind, std::size_t hidden) {
  const auto h = static_cast<Eigen::Index>(hidden);
  return {Vector::Zero(h), kind == CellKind::Lstm ? Vector::Zero(h) : Vector()};
}

namespace {

// Forward step that also returns the post-activation gates.
CellState step(CellKind kind, const CellParams& p, const Vector& x, const CellState& s, Vector* gates_out,
               Vector* tanh_c_out) {
  const Eigen::Index h = s.h.size();
  Vector a = p.W * x + p.b;
  CellState next;
  if (kind == CellKind::Gru) {
    a.head(2 * h).noalias() += p.U.topRows(2 * h) * s.h;
    Vector zr = sigmoid(Vector(a.head(2 * h)));
    const auto z = zr.head(h);
    const auto r = zr.tail(h);
    const Vector rh = r.cwiseProduct(s.h);
    a.tail(h).noalias() += p.U.bottomRows(h) * rh;
    const Vector n = a.tail(h).array().tanh().matrix();
    next.h = z.cwiseProduct(s.h) + (Vector::Ones(h) - z).cwiseProduct(n);
    if (gates_out) {
      gates_out->resize(3 * h);
      *gates_out << zr, n;
    }
  } else {
    a.noalias() += p.U * s.h;
    const Vector i = sigmoid(Vector(a.segment(0, h)));
    const Vector f = sigmoid(Vector(a.segment(h, h)));
    const Vector g = a.segment(2 * h, h).array().tanh().matrix();
    const Vector o = sigmoid(Vector(a.segment(3 * h, h)));
    next.c = f.cwiseProduct(s.c) + i.cwiseProduct(g);
    const Vector tc = next.c.array().tanh().matrix();
    next.h = o.cwiseProduct(tc);
    if (gates_out) {
      gates_out->resize(4 * h);
      *gates_out << i, f, g, o;
    }
    if (tanh_c_out) *tanh_c_out = tc;
  }
  return next;
}

void check_cell(CellKind kind, const CellParams& p, std::size_t input, std::size_t hidden) {
  const auto g = static_cast<Eigen::Index>(gate_count(kind) * hidden);
  if (p.W.rows() != g || p.W.cols() != static_cast<Eigen::Index>(input) || p.U.rows() != g ||
      p.U.cols() != static_cast<Eigen::Index>(hidden) || p.b.size() != g) {
    throw Error("cell parameters do not match input " + std::to_string(input) + " / hidden " +
                std::to_string(hidden));
  }
}

}  // namespace

CellState cell_forward(CellKind kind, const CellParams& params, const Vector& x, const CellState& state) {
  const auto hidden = static_cast<std::size_t>(state.h.size());
  check_cell(kind, params, static_cast<std::size_t>(x.size()), hidden);
  if (kind == CellKind::Lstm && state.c.size() != state.h.size()) throw Error("cell_forward: LSTM state needs c");
  return step(kind, params, x, state, nullptr, nullptr);
}

// ------------------------------------------------------------------ batches

PaddedRow pad_and_index(std::span<const std::string> tokens, const TokenIndex& index, std::size_t max_len) {
  if (max_len == 0) throw Error("pad_and_index: max_len must be >= 1");
  PaddedRow row;
  row.ids.assign(max_len, kPadId);
  row.length = std::min(tokens.size(), max_len);
  for (std::size_t t = 0; t < row.length; ++t) {
    const auto it = index.find(tokens[t]);
    row.ids[t] = it == index.end() ? kOovId : it->second;
  }
  return row;
}

SequenceBatch make_batch(std::span<const textprep::TokenSequence> docs, const TokenIndex& index,
                         std::size_t max_len, std::span<const Label> labels) {
  if (!labels.empty() && labels.size() != docs.size()) throw Error("make_batch: label count mismatch");
  SequenceBatch batch;
  batch.max_len = max_len;
  for (const auto& doc : docs) {
    PaddedRow row = pad_and_index(doc.tokens, index, max_len);
    batch.ids.insert(batch.ids.end(), row.ids.begin(), row.ids.end());
    batch.lengths.push_back(row.length);
  }
  batch.labels.assign(labels.begin(), labels.end());
  return batch;
}

// -------------------------------------------------------------------- model

std::vector<std::string> sequence_vocabulary(std::span<const textprep::TokenSequence> docs) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> vocab;
  vocab.reserve(items.size());
  for (auto& [token, count] : items) vocab.push_back(std::move(token));
  return vocab;
}

RNNModel init_model(CellKind kind, const RNNHyper& hyper, std::vector<std::string> vocab,
                    const embeddings::EmbeddingTable* pretrained, std::size_t embed_dim) {
  if (hyper.hidden == 0) throw Error("init_model: hidden size must be >= 1");
  RNNModel model;
  model.kind = kind;
  model.hyper = hyper;
  model.vocab = std::move(vocab);
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    if (!model.index.emplace(model.vocab[i], static_cast<int>(i) + 2).second) {
      throw Error("init_model: duplicate vocabulary token '" + model.vocab[i] + "'");
    }
  }
  const std::size_t dim = pretrained ? pretrained->dim() : embed_dim;
  if (dim == 0) throw Error("init_model: embedding dimension must be >= 1");
  const auto rows = static_cast<Eigen::Index>(model.vocab.size() + 2);
  RNNParams& p = model.params;
  p.embedding = RowMatrix::Zero(rows, static_cast<Eigen::Index>(dim));
  if (pretrained) {
    model.embedding_trainable = false;
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
      if (const double* v = pretrained->find(model.vocab[i])) {
        std::copy(v, v + dim, p.embedding.row(static_cast<Eigen::Index>(i) + 2).data());
      }
    }
  } else {
    model.embedding_trainable = true;
    SplitMix64 rng = SplitMix64::substream(hyper.seed, 10);
    fill_uniform(p.embedding.data() + dim, (static_cast<std::size_t>(rows) - 1) * dim, 0.5 / static_cast<double>(dim),
                 rng);
  }

  const double cell_half = 1.0 / std::sqrt(static_cast<double>(hyper.hidden));
  for (int d = 0; d < 2; ++d) {
    CellParams& c = d == 0 ? p.fwd : p.bwd;
    c = zero_cell(kind, dim, hyper.hidden);
    SplitMix64 rng = SplitMix64::substream(hyper.seed, 11 + static_cast<std::uint64_t>(d));
    fill_uniform(c.W.data(), static_cast<std::size_t>(c.W.size()), cell_half, rng);
    fill_uniform(c.U.data(), static_cast<std::size_t>(c.U.size()), cell_half, rng);
    if (kind == CellKind::Lstm) {
      c.b.segment(static_cast<Eigen::Index>(hyper.hidden), static_cast<Eigen::Index>(hyper.hidden)).setOnes();
    }
  }
  p.head_w = Vector::Zero(static_cast<Eigen::Index>(2 * hyper.hidden));
  SplitMix64 rng = SplitMix64::substream(hyper.seed, 13);
  fill_uniform(p.head_w.data(), 2 * hyper.hidden, 1.0 / std::sqrt(2.0 * static_cast<double>(hyper.hidden)), rng);
  p.head_b = 0.0;
  return model;
}

namespace {

struct StepCache {
  int id = 0;
  Vector h_prev;
  Vector c_prev;
  Vector gates;
  Vector tanh_c;
};

// Runs one direction over positions; keeps per-step caches when asked.
CellState run_direction(const RNNModel& m, const CellParams& p, std::span<const int> ids, std::size_t length,
                        bool reverse, std::vector<StepCache>* caches) {
  CellState s = zero_state(m.kind, m.hidden());
  if (caches) caches->clear();
  for (std::size_t k = 0; k < length; ++k) {
    const int id = ids[reverse ? length - 1 - k : k];
    const Vector x = m.params.embedding.row(id).transpose();
    if (caches) {
      StepCache c;
      c.id = id;
      c.h_prev = s.h;
      c.c_prev = s.c;
      s = step(m.kind, p, x, s, &c.gates, &c.tanh_c);
      caches->push_back(std::move(c));
    } else {
      s = step(m.kind, p, x, s, nullptr, nullptr);
    }
  }
  return s;
}

void check_ids(const RNNModel& m, const SequenceBatch& batch) {
  const auto v = static_cast<int>(m.vocab_size());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    if (batch.lengths[r] > batch.max_len) throw Error("batch row " + std::to_string(r) + " longer than max_len");
    for (std::size_t t = 0; t < batch.lengths[r]; ++t) {
      const int id = batch.row(r)[t];
      if (id < 0 || id >= v) {
        throw Error("batch row " + std::to_string(r) + " holds token id " + std::to_string(id) +
                    " outside the vocabulary of " + std::to_string(v));
      }
    }
  }
}

double row_logit(const RNNModel& m, std::span<const int> ids, std::size_t length) {
  const CellState f = run_direction(m, m.params.fwd, ids, length, false, nullptr);
  const CellState b = run_direction(m, m.params.bwd, ids, length, true, nullptr);
  const auto h = static_cast<Eigen::Index>(m.hidden());
  return m.params.head_w.head(h).dot(f.h) + m.params.head_w.tail(h).dot(b.h) + m.params.head_b;
}

// Accumulates gradients of one direction given dL/d(final h).
void backprop_direction(const RNNModel& m, const CellParams& p, const std::vector<StepCache>& steps, Vector dh,
                        CellParams& g, RowMatrix* d_embedding) {
  const Eigen::Index h = static_cast<Eigen::Index>(m.hidden());
  Vector dc = m.kind == CellKind::Lstm ? Vector::Zero(h) : Vector();
  Vector da(static_cast<Eigen::Index>(gate_count(m.kind)) * h);
  for (std::size_t k = steps.size(); k-- > 0;) {
    const StepCache& s = steps[k];
    const auto x = m.params.embedding.row(s.id).transpose();
    Vector dh_prev;
    if (m.kind == CellKind::Gru) {
      const auto z = s.gates.segment(0, h);
      const auto r = s.gates.segment(h, h);
      const auto n = s.gates.segment(2 * h, h);
      da.segment(0, h) = dh.cwiseProduct(s.h_prev - n).cwiseProduct(z).cwiseProduct(Vector::Ones(h) - z);
      const Vector dn = dh.cwiseProduct(Vector::Ones(h) - z);
      da.segment(2 * h, h) = dn.array() * (1.0 - n.array().square());
      const Vector drh = p.U.bottomRows(h).transpose() * da.segment(2 * h, h);
      da.segment(h, h) = drh.cwiseProduct(s.h_prev).cwiseProduct(r).cwiseProduct(Vector::Ones(h) - r);
      const Vector rh = r.cwiseProduct(s.h_prev);
      g.U.topRows(2 * h).noalias() += da.head(2 * h) * s.h_prev.transpose();
      g.U.bottomRows(h).noalias() += da.segment(2 * h, h) * rh.transpose();
      dh_prev = dh.cwiseProduct(z) + drh.cwiseProduct(r);
      dh_prev.noalias() += p.U.topRows(2 * h).transpose() * da.head(2 * h);
    } else {
      const auto i = s.gates.segment(0, h);
      const auto f = s.gates.segment(h, h);
      const auto gg = s.gates.segment(2 * h, h);
      const auto o = s.gates.segment(3 * h, h);
      const Vector dct = dc + Vector(dh.array() * o.array() * (1.0 - s.tanh_c.array().square()));
      da.segment(0, h) = dct.cwiseProduct(gg).cwiseProduct(i).cwiseProduct(Vector::Ones(h) - i);
      da.segment(h, h) = dct.cwiseProduct(s.c_prev).cwiseProduct(f).cwiseProduct(Vector::Ones(h) - f);
      da.segment(2 * h, h) = dct.array() * i.array() * (1.0 - gg.array().square());
      da.segment(3 * h, h) = dh.cwiseProduct(s.tanh_c).cwiseProduct(o).cwiseProduct(Vector::Ones(h) - o);
      dc = dct.cwiseProduct(f);
      g.U.noalias() += da * s.h_prev.transpose();
      dh_prev.noalias() = p.U.transpose() * da;
    }
    g.W.noalias() += da * x.transpose();
    g.b += da;
    if (d_embedding) d_embedding->row(s.id).noalias() += (p.W.transpose() * da).transpose();
    dh = std::move(dh_prev);
  }
}

RNNParams zero_like(const RNNModel& m, bool with_embedding) {
  RNNParams g;
  if (with_embedding) g.embedding = RowMatrix::Zero(m.params.embedding.rows(), m.params.embedding.cols());
  g.fwd = zero_cell(m.kind, m.embed_dim(), m.hidden());
  g.bwd = zero_cell(m.kind, m.embed_dim(), m.hidden());
  g.head_w = Vector::Zero(static_cast<Eigen::Index>(2 * m.hidden()));
  g.head_b = 0.0;
  return g;
}

}  // namespace

std::vector<double> bi_rnn_forward(const RNNModel& model, const SequenceBatch& batch) {
  check_ids(model, batch);
  std::vector<double> p(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) p[r] = sigmoid(row_logit(model, batch.row(r), batch.lengths[r]));
  return p;
}

LossGradient loss_and_gradient(const RNNModel& model, const SequenceBatch& batch, std::span<const std::size_t> rows) {
  check_ids(model, batch);
  if (batch.labels.size() != batch.rows()) throw Error("loss_and_gradient: batch has no labels");
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(batch.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }
  LossGradient out;
  out.grad = zero_like(model, model.embedding_trainable);
  RowMatrix* d_embedding = model.embedding_trainable ? &out.grad.embedding : nullptr;
  const auto h = static_cast<Eigen::Index>(model.hidden());
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<StepCache> fwd_steps;
  std::vector<StepCache> bwd_steps;
  for (const std::size_t r : rows) {
    const auto ids = batch.row(r);
    const std::size_t len = batch.lengths[r];
    const CellState f = run_direction(model, model.params.fwd, ids, len, false, &fwd_steps);
    const CellState b = run_direction(model, model.params.bwd, ids, len, true, &bwd_steps);
    const double logit = model.params.head_w.head(h).dot(f.h) + model.params.head_w.tail(h).dot(b.h) +
                         model.params.head_b;
    const double y = label_value(batch.labels[r]);
    out.loss += scale * (y > 0.5 ? softplus(-logit) : softplus(logit));
    const double dlogit = scale * (sigmoid(logit) - y);
    out.grad.head_w.head(h) += dlogit * f.h;
    out.grad.head_w.tail(h) += dlogit * b.h;
    out.grad.head_b += dlogit;
    backprop_direction(model, model.params.fwd, fwd_steps, dlogit * model.params.head_w.head(h), out.grad.fwd,
                       d_embedding);
    backprop_direction(model, model.params.bwd, bwd_steps, dlogit * model.params.head_w.tail(h), out.grad.bwd,
                       d_embedding);
  }
  return out;
}

double dataset_loss(const RNNModel& model, const SequenceBatch& batch) {
  const std::vector<double> p = bi_rnn_forward(model, batch);
  double loss = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    const double y = label_value(batch.labels.at(r));
    loss -= y > 0.5 ? std::log(p[r]) : std::log1p(-p[r]);
  }
  return loss / static_cast<double>(p.size());
}

std::vector<ParamView> parameter_views(RNNParams& p, bool include_embedding) {
  auto view = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  std::vector<ParamView> views;
  if (include_embedding) views.push_back({"embedding", view(p.embedding)});
  views.push_back({"fwd.W", view(p.fwd.W)});
  views.push_back({"fwd.U", view(p.fwd.U)});
  views.push_back({"fwd.b", view(p.fwd.b)});
  views.push_back({"bwd.W", view(p.bwd.W)});
  views.push_back({"bwd.U", view(p.bwd.U)});
  views.push_back({"bwd.b", view(p.bwd.b)});
  views.push_back({"head_w", view(p.head_w)});
  views.push_back({"head_b", std::span<double>(&p.head_b, 1)});
  return views;
}

RNNModel bptt_train(RNNModel model, const SequenceBatch& train, TrainLog* log) {
  if (train.labels.size() != train.rows() || train.rows() == 0) throw Error("bptt_train: training batch has no labels");
  const auto hate = std::count(train.labels.begin(), train.labels.end(), Label::Hate);
  if (hate == 0 || static_cast<std::size_t>(hate) == train.rows()) {
    throw Error("bptt_train: training data contains a single class");
  }
  check_ids(model, train);
  const RNNHyper& hp = model.hyper;
  const std::size_t batch_size = std::max<std::size_t>(1, hp.batch_size);
  const bool emb = model.embedding_trainable;
  RNNParams velocity = zero_like(model, emb);
  std::vector<std::size_t> order(train.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng = SplitMix64::substream(hp.seed, 20);

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      LossGradient lg = loss_and_gradient(model, train, rows);
      if (!std::isfinite(lg.loss)) {
        throw Error("bptt_train: loss is " + std::to_string(lg.loss) + " at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(batches));
      }
      epoch_loss += lg.loss;
      ++batches;

      auto grads = parameter_views(lg.grad, emb);
      double norm2 = 0.0;
      for (const auto& g : grads) {
        for (const double v : g.values) norm2 += v * v;
      }
      const double norm = std::sqrt(norm2);
      const double clip = norm > hp.clip_norm ? hp.clip_norm / norm : 1.0;
      auto params = parameter_views(model.params, emb);
      auto vel = parameter_views(velocity, emb);
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto& pv = params[k].values;
        auto& vv = vel[k].values;
        const auto& gv = grads[k].values;
        for (std::size_t i = 0; i < pv.size(); ++i) {
          vv[i] = hp.momentum * vv[i] - hp.lr * clip * gv[i];
          pv[i] += vv[i];
        }
      }
      if (emb) model.params.embedding.row(kPadId).setZero();
    }
    if (log) log->epoch_loss.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
  }
  return model;
}

// -------------------------------------------------------------- checkpoints

namespace {

constexpr std::string_view kCheckpointMagic = "hatebench-rnn v1";

std::size_t param_count(CellKind kind, std::size_t vocab_size, std::size_t dim, std::size_t hidden) {
  const std::size_t g = gate_count(kind) * hidden;
  return vocab_size * dim + 2 * (g * dim + g * hidden + g) + 2 * hidden + 1;
}

}  // namespace

void save_checkpoint(std::ostream& out, const RNNModel& model) {
  static_assert(std::endian::native == std::endian::little, "checkpoints are written little-endian");
  nlohmann::ordered_json header;
  header["cell"] = std::string(to_string(model.kind));
  header["vocab_size"] = model.vocab_size();
  header["embed_dim"] = model.embed_dim();
  header["hidden"] = model.hidden();
  header["max_len"] = model.hyper.max_len;
  header["batch_size"] = model.hyper.batch_size;
  header["lr"] = model.hyper.lr;
  header["momentum"] = model.hyper.momentum;
  header["epochs"] = model.hyper.epochs;
  header["clip_norm"] = model.hyper.clip_norm;
  header["seed"] = model.hyper.seed;
  header["embedding_trainable"] = model.embedding_trainable;
  header["param_count"] = param_count(model.kind, model.vocab_size(), model.embed_dim(), model.hidden());
  header["vocab"] = model.vocab;
  out << kCheckpointMagic << '\n' << header.dump() << '\n';
  RNNModel copy = model;
  for (const auto& v : parameter_views(copy.params, true)) {
    out.write(reinterpret_cast<const char*>(v.values.data()), static_cast<std::streamsize>(v.values.size_bytes()));
  }
}

RNNModel load_checkpoint(std::istream& in, const CheckpointExpect& expect) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw Error("checkpoint: missing '" + std::string(kCheckpointMagic) + "' line");
  }
  if (!std::getline(in, line)) throw Error("checkpoint: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: malformed header: ") + e.what());
  }
  RNNModel m;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::size_t declared = 0;
  try {
    m.kind = parse_cell(header.at("cell").get<std::string>());
    vocab_size = header.at("vocab_size").get<std::size_t>();
    dim = header.at("embed_dim").get<std::size_t>();
    m.hyper.hidden = header.at("hidden").get<std::size_t>();
    m.hyper.max_len = header.at("max_len").get<std::size_t>();
    m.hyper.batch_size = header.at("batch_size").get<std::size_t>();
    m.hyper.lr = header.at("lr").get<double>();
    m.hyper.momentum = header.at("momentum").get<double>();
    m.hyper.epochs = header.at("epochs").get<std::size_t>();
    m.hyper.clip_norm = header.at("clip_norm").get<double>();
    m.hyper.seed = header.at("seed").get<std::uint64_t>();
    m.embedding_trainable = header.at("embedding_trainable").get<bool>();
    declared = header.at("param_count").get<std::size_t>();
    m.vocab = header.at("vocab").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint: bad header field: ") + e.what());
  }
  auto mismatch = [](std::string_view what, std::size_t got, std::size_t want) {
    return Error("checkpoint: " + std::string(what) + " is " + std::to_string(got) + ", expected " +
                 std::to_string(want));
  };
  if (expect.kind && *expect.kind != m.kind) throw Error("checkpoint: cell kind is " + std::string(to_string(m.kind)));
  if (expect.embed_dim && *expect.embed_dim != dim) throw mismatch("embed_dim", dim, *expect.embed_dim);
  if (expect.hidden && *expect.hidden != m.hyper.hidden) throw mismatch("hidden", m.hyper.hidden, *expect.hidden);
  if (expect.vocab_size && *expect.vocab_size != vocab_size) throw mismatch("vocab_size", vocab_size, *expect.vocab_size);
  if (m.vocab.size() + 2 != vocab_size) throw mismatch("vocabulary length + 2", m.vocab.size() + 2, vocab_size);
  const std::size_t count = param_count(m.kind, vocab_size, dim, m.hyper.hidden);
  if (declared != count) throw mismatch("param_count", declared, count);
  if (dim == 0 || m.hyper.hidden == 0) throw Error("checkpoint: zero dimension");

  for (std::size_t i = 0; i < m.vocab.size(); ++i) m.index.emplace(m.vocab[i], static_cast<int>(i) + 2);
  m.params.embedding = RowMatrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
  m.params.fwd = zero_cell(m.kind, dim, m.hyper.hidden);
  m.params.bwd = zero_cell(m.kind, dim, m.hyper.hidden);
  m.params.head_w = Vector::Zero(static_cast<Eigen::Index>(2 * m.hyper.hidden));
  for (const auto& v : parameter_views(m.params, true)) {
    in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(v.values.size_bytes()));
    if (in.gcount() != static_cast<std::streamsize>(v.values.size_bytes())) {
      throw Error("checkpoint: parameter blob truncated in block '" + v.name + "'");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error("checkpoint: trailing bytes after parameters");
  return m;
}

}  // namespace hatebench::neural
