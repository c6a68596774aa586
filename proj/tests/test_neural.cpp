#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "hatebench/neural.hpp"
#include "hatebench/rng.hpp"

using namespace hatebench;
using namespace hatebench::neural;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

CellParams random_cell(CellKind kind, std::size_t in, std::size_t hid, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto g = static_cast<Eigen::Index>(gate_count(kind) * hid);
  CellParams p;
  p.W = Matrix(g, static_cast<Eigen::Index>(in));
  p.U = Matrix(g, static_cast<Eigen::Index>(hid));
  p.b = Vector(g);
  for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < p.U.size(); ++i) p.U.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b[i] = rng.uniform(-1, 1);
  return p;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1, 1);
  return v;
}

// Pre-activation of gate block `gate`, unit `k`, written out with plain loops.
double pre(const CellParams& p, std::size_t hid, std::size_t gate, std::size_t k, const Vector& x,
           const std::vector<double>& h) {
  const auto row = static_cast<Eigen::Index>(gate * hid + k);
  double s = p.b[row];
  for (Eigen::Index j = 0; j < x.size(); ++j) s += p.W(row, j) * x[j];
  for (std::size_t j = 0; j < hid; ++j) s += p.U(row, static_cast<Eigen::Index>(j)) * h[j];
  return s;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<textprep::TokenSequence> seqs(const std::vector<std::vector<std::string>>& tokens) {
  std::vector<textprep::TokenSequence> out;
  for (const auto& t : tokens) {
    textprep::TokenSequence s;
    s.doc_id = std::to_string(out.size());
    s.tokens = t;
    out.push_back(s);
  }
  return out;
}

RNNModel small_model(CellKind kind, std::size_t hidden = 4, std::uint64_t seed = 1) {
  RNNHyper h;
  h.hidden = hidden;
  h.max_len = 6;
  h.seed = seed;
  return init_model(kind, h, {"a", "b", "c", "t"}, nullptr, 3);
}

std::vector<double> flat(RNNParams p) {
  std::vector<double> out;
  for (const auto& v : parameter_views(p, true)) out.insert(out.end(), v.values.begin(), v.values.end());
  return out;
}

}  // namespace

TEST(Cells, ZeroParametersKeepZeroState) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    const auto p = zero_cell(kind, 3, 4);
    const auto s = cell_forward(kind, p, random_vector(3, 1), zero_state(kind, 4));
    EXPECT_EQ(s.h, Vector::Zero(4));
    if (kind == CellKind::Lstm) EXPECT_EQ(s.c, Vector::Zero(4));
  }
}

TEST(Cells, GruMatchesHandRolledStep) {
  const std::size_t in = 3;
  const std::size_t hid = 4;
  const auto p = random_cell(CellKind::Gru, in, hid, 2);
  const Vector x = random_vector(in, 3);
  CellState st = zero_state(CellKind::Gru, hid);
  st.h = random_vector(hid, 4);
  const auto h = to_std(st.h);
  std::vector<double> r(hid);
  for (std::size_t k = 0; k < hid; ++k) r[k] = sig(pre(p, hid, 1, k, x, h));
  std::vector<double> rh(hid);
  for (std::size_t k = 0; k < hid; ++k) rh[k] = r[k] * h[k];
  const auto out = cell_forward(CellKind::Gru, p, x, st);
  for (std::size_t k = 0; k < hid; ++k) {
    const double z = sig(pre(p, hid, 0, k, x, h));
    // The candidate applies U to r * h, so rebuild that term by hand.
    const auto row = static_cast<Eigen::Index>(2 * hid + k);
    double s = p.b[row];
    for (std::size_t j = 0; j < in; ++j) s += p.W(row, static_cast<Eigen::Index>(j)) * x[static_cast<Eigen::Index>(j)];
    for (std::size_t j = 0; j < hid; ++j) s += p.U(row, static_cast<Eigen::Index>(j)) * rh[j];
    const double n = std::tanh(s);
    EXPECT_NEAR(out.h[static_cast<Eigen::Index>(k)], z * h[k] + (1 - z) * n, 1e-12);
  }
}

TEST(Cells, LstmMatchesHandRolledStep) {
  const std::size_t in = 2;
  const std::size_t hid = 3;
  const auto p = random_cell(CellKind::Lstm, in, hid, 5);
  const Vector x = random_vector(in, 6);
  CellState st = zero_state(CellKind::Lstm, hid);
  st.h = random_vector(hid, 7);
  st.c = random_vector(hid, 8);
  const auto h = to_std(st.h);
  const auto out = cell_forward(CellKind::Lstm, p, x, st);
  for (std::size_t k = 0; k < hid; ++k) {
    const double i = sig(pre(p, hid, 0, k, x, h));
    const double f = sig(pre(p, hid, 1, k, x, h));
    const double g = std::tanh(pre(p, hid, 2, k, x, h));
    const double o = sig(pre(p, hid, 3, k, x, h));
    const double c = f * st.c[static_cast<Eigen::Index>(k)] + i * g;
    EXPECT_NEAR(out.c[static_cast<Eigen::Index>(k)], c, 1e-12);
    EXPECT_NEAR(out.h[static_cast<Eigen::Index>(k)], o * std::tanh(c), 1e-12);
  }
}

TEST(Cells, DimensionMismatchThrows) {
  const auto p = zero_cell(CellKind::Gru, 3, 4);
  EXPECT_THROW(cell_forward(CellKind::Gru, p, Vector::Zero(2), zero_state(CellKind::Gru, 4)), Error);
}

TEST(Batches, PadAndIndex) {
  const TokenIndex idx{{"a", 2}, {"b", 3}};
  const std::vector<std::string> t{"a", "zzz", "b"};
  const auto row = pad_and_index(t, idx, 5);
  EXPECT_EQ(row.ids, (std::vector<int>{2, kOovId, 3, kPadId, kPadId}));
  EXPECT_EQ(row.length, 3u);
  const auto cut = pad_and_index(t, idx, 2);
  EXPECT_EQ(cut.ids, (std::vector<int>{2, kOovId}));
  EXPECT_EQ(cut.length, 2u);
  EXPECT_THROW(pad_and_index(t, idx, 0), Error);
}

TEST(BiRnn, ReversalSymmetry) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    RNNModel m = small_model(kind, 4, 3);
    RNNModel mirrored = m;
    std::swap(mirrored.params.fwd, mirrored.params.bwd);
    const Eigen::Index hid = 4;
    mirrored.params.head_w.head(hid) = m.params.head_w.tail(hid);
    mirrored.params.head_w.tail(hid) = m.params.head_w.head(hid);
    const auto docs = seqs({{"a", "b", "t", "c"}, {"c", "a"}});
    const auto rev = seqs({{"c", "t", "b", "a"}, {"a", "c"}});
    const auto p = bi_rnn_forward(m, make_batch(docs, m.index, 6));
    const auto q = bi_rnn_forward(mirrored, make_batch(rev, m.index, 6));
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(BiRnn, PaddingAndBatchInvariance) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    const RNNModel m = small_model(kind);
    const auto one = seqs({{"a", "t"}});
    const auto many = seqs({{"b", "b", "b", "c"}, {"a", "t"}, {}});
    const double alone = bi_rnn_forward(m, make_batch(one, m.index, 2))[0];
    const auto batch = bi_rnn_forward(m, make_batch(many, m.index, 9));
    EXPECT_NEAR(batch[1], alone, 1e-14);
    EXPECT_NEAR(batch[2], sig(m.params.head_b), 1e-15);
    for (const double v : batch) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(BiRnn, FiniteDifferenceGradients) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    const auto rep = hbtest::check_rnn(kind, 11);
    EXPECT_GE(rep.coords, 100u) << to_string(kind);
    EXPECT_LT(rep.max_rel, 1e-4) << to_string(kind);
  }
}

TEST(BiRnn, InitialisationRules) {
  const RNNModel gru = small_model(CellKind::Gru);
  EXPECT_EQ(gru.params.embedding.row(0), Eigen::RowVectorXd::Zero(3));
  EXPECT_TRUE(gru.embedding_trainable);
  const RNNModel lstm = small_model(CellKind::Lstm);
  EXPECT_EQ(lstm.params.fwd.b.segment(4, 4), Vector::Ones(4));
  EXPECT_EQ(lstm.params.fwd.b.head(4), Vector::Zero(4));

  embeddings::EmbeddingTable table(3, "test");
  const std::vector<double> a{1, 2, 3};
  table.add("a", a);
  RNNHyper h;
  h.hidden = 2;
  const auto pre = init_model(CellKind::Gru, h, {"a", "b"}, &table, 3);
  EXPECT_FALSE(pre.embedding_trainable);
  EXPECT_EQ(pre.params.embedding.row(2), Eigen::RowVector3d(1, 2, 3));
  EXPECT_EQ(pre.params.embedding.row(3), Eigen::RowVectorXd::Zero(3));
  EXPECT_EQ(pre.params.embedding.row(1), Eigen::RowVectorXd::Zero(3));
}

TEST(BiRnn, SequenceVocabularyOrder) {
  const auto docs = seqs({{"b", "a", "b"}, {"c", "a", "b"}});
  EXPECT_EQ(sequence_vocabulary(docs), (std::vector<std::string>{"b", "a", "c"}));
}

namespace {

std::vector<textprep::TokenSequence> token_t_docs(std::uint64_t seed, std::size_t n, std::vector<Label>& labels) {
  SplitMix64 rng(seed);
  const std::vector<std::string> filler{"a", "b", "c", "d", "e", "f", "g"};
  std::vector<std::vector<std::string>> tokens;
  labels.clear();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> t;
    const auto len = 2 + rng.below(7);
    for (std::uint64_t k = 0; k < len; ++k) t.push_back(filler[rng.below(filler.size())]);
    const bool hate = rng.below(2) == 1;
    if (hate) t[rng.below(t.size())] = "t";
    tokens.push_back(t);
    labels.push_back(hate ? Label::Hate : Label::NonHate);
  }
  return seqs(tokens);
}

}  // namespace

TEST(Training, LearnsTokenPresence) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    std::vector<Label> ytr;
    std::vector<Label> yte;
    const auto train = token_t_docs(1, 400, ytr);
    const auto test = token_t_docs(2, 200, yte);
    RNNHyper h;
    h.hidden = 16;
    h.max_len = 10;
    h.epochs = 15;
    h.batch_size = 16;
    RNNModel m = init_model(kind, h, sequence_vocabulary(train), nullptr, 8);
    m = bptt_train(std::move(m), make_batch(train, m.index, 10, ytr));
    const auto p = bi_rnn_forward(m, make_batch(test, m.index, 10));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hit += ((p[i] >= 0.5) == (yte[i] == Label::Hate)) ? 1 : 0;
    EXPECT_GE(static_cast<double>(hit) / static_cast<double>(p.size()), 0.95) << to_string(kind);
  }
}

TEST(Training, ZeroEpochsLeavesModelUnchanged) {
  std::vector<Label> y;
  const auto docs = token_t_docs(3, 20, y);
  RNNHyper h;
  h.hidden = 4;
  h.epochs = 0;
  const RNNModel m = init_model(CellKind::Gru, h, sequence_vocabulary(docs), nullptr, 3);
  const RNNModel after = bptt_train(m, make_batch(docs, m.index, 8, y));
  EXPECT_EQ(flat(after.params), flat(m.params));
}

TEST(Training, FullBatchLossDoesNotIncreaseAtSmallRate) {
  std::vector<Label> y;
  const auto docs = token_t_docs(4, 40, y);
  RNNHyper h;
  h.hidden = 6;
  h.lr = 0.01;
  h.momentum = 0.0;
  h.batch_size = 40;
  h.epochs = 1;
  RNNModel m = init_model(CellKind::Lstm, h, sequence_vocabulary(docs), nullptr, 4);
  const auto batch = make_batch(docs, m.index, 8, y);
  double prev = dataset_loss(m, batch);
  for (int step = 0; step < 20; ++step) {
    m = bptt_train(std::move(m), batch);
    const double now = dataset_loss(m, batch);
    EXPECT_LE(now, prev + 1e-12) << "step " << step;
    prev = now;
  }
}

TEST(Training, SingleClassIsRejected) {
  const auto docs = seqs({{"a"}, {"b"}});
  const std::vector<Label> y{Label::Hate, Label::Hate};
  const RNNModel m = small_model(CellKind::Gru);
  EXPECT_THROW(bptt_train(m, make_batch(docs, m.index, 4, y)), Error);
}

TEST(Checkpoint, RoundTrip) {
  for (const auto kind : {CellKind::Gru, CellKind::Lstm}) {
    const RNNModel m = small_model(kind, 5, 9);
    std::stringstream buf;
    save_checkpoint(buf, m);
    EXPECT_EQ(buf.str().substr(0, 16), "hatebench-rnn v1");
    const RNNModel back = load_checkpoint(buf);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.vocab, m.vocab);
    EXPECT_EQ(flat(back.params), flat(m.params));
    const auto docs = seqs({{"a", "t"}, {"c"}});
    EXPECT_EQ(bi_rnn_forward(back, make_batch(docs, back.index, 6)), bi_rnn_forward(m, make_batch(docs, m.index, 6)));
  }
}

TEST(Checkpoint, RejectsMismatchAndTruncation) {
  const RNNModel m = small_model(CellKind::Gru, 5);
  std::stringstream buf;
  save_checkpoint(buf, m);
  const std::string blob = buf.str();
  CheckpointExpect expect;
  expect.hidden = 6;
  std::istringstream a(blob);
  EXPECT_THROW(load_checkpoint(a, expect), Error);
  expect = {};
  expect.kind = CellKind::Lstm;
  std::istringstream b(blob);
  EXPECT_THROW(load_checkpoint(b, expect), Error);
  std::istringstream c(blob.substr(0, blob.size() - 9));
  EXPECT_THROW(load_checkpoint(c), Error);
  std::istringstream d("hatebench-rnn v1\n{not json\n");
  EXPECT_THROW(load_checkpoint(d), Error);
}

TEST(Cells, ParseCell) {
  EXPECT_EQ(parse_cell("LSTM"), CellKind::Lstm);
  EXPECT_EQ(parse_cell("gru"), CellKind::Gru);
  EXPECT_THROW(parse_cell("rnn"), ConfigError);
}
