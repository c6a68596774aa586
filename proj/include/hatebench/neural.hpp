#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hatebench/common.hpp"
#include "hatebench/embeddings.hpp"
#include "hatebench/textprep.hpp"

namespace hatebench::neural {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class CellKind { Gru, Lstm };

std::string_view to_string(CellKind kind);
/// "gru" / "lstm", case-insensitive. Throws ConfigError otherwise.
CellKind parse_cell(std::string_view name);

/// Gates per cell: GRU [z, r, n], LSTM [i, f, g, o].
std::size_t gate_count(CellKind kind);

/// Gate blocks stacked row-wise: W is (gates*H) x input, U is (gates*H) x H.
///   GRU:  z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
///         n = tanh(Wn x + Un (r * h) + bn),  h' = z * h + (1 - z) * n
///   LSTM: i, f, o = s(...), g = tanh(...),
///         c' = f * c + i * g,  h' = o * tanh(c')
struct CellParams {
  Matrix W;
  Matrix U;
  Vector b;
};

CellParams zero_cell(CellKind kind, std::size_t input, std::size_t hidden);

/// c is empty for GRU.
struct CellState {
  Vector h;
  Vector c;
};

CellState zero_state(CellKind kind, std::size_t hidden);

/// One time step. Throws Error on a dimension mismatch.
CellState cell_forward(CellKind kind, const CellParams& params, const Vector& x, const CellState& state);

// ------------------------------------------------------------------ batches

inline constexpr int kPadId = 0;
inline constexpr int kOovId = 1;

using TokenIndex = std::unordered_map<std::string, int>;

struct PaddedRow {
  std::vector<int> ids;  // exactly max_len entries
  std::size_t length = 0;
};

/// Truncate to max_len, unknown tokens -> 1, right-pad with 0.
/// Throws Error if max_len is 0.
PaddedRow pad_and_index(std::span<const std::string> tokens, const TokenIndex& index, std::size_t max_len);

struct SequenceBatch {
  std::size_t max_len = 0;
  std::vector<int> ids;  // rows x max_len, row-major
  std::vector<std::size_t> lengths;
  std::vector<Label> labels;

  std::size_t rows() const { return lengths.size(); }
  std::span<const int> row(std::size_t r) const { return {ids.data() + r * max_len, max_len}; }
};

/// labels may be empty (prediction only).
SequenceBatch make_batch(std::span<const textprep::TokenSequence> docs, const TokenIndex& index,
                         std::size_t max_len, std::span<const Label> labels = {});

// -------------------------------------------------------------------- model

struct RNNHyper {
  std::size_t hidden = 64;
  std::size_t max_len = 50;
  std::size_t batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 10;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

/// Everything that is learned (or could be). Also used for gradients.
struct RNNParams {
  RowMatrix embedding;  // vocab_size x embed_dim; row 0 pad, row 1 OOV
  CellParams fwd;
  CellParams bwd;
  Vector head_w;  // 2H, forward half first
  double head_b = 0.0;
};

struct RNNModel {
  CellKind kind = CellKind::Gru;
  RNNHyper hyper;
  std::vector<std::string> vocab;  // token for id 2 + i
  TokenIndex index;
  bool embedding_trainable = true;
  RNNParams params;

  std::size_t vocab_size() const { return static_cast<std::size_t>(params.embedding.rows()); }
  std::size_t embed_dim() const { return static_cast<std::size_t>(params.embedding.cols()); }
  std::size_t hidden() const { return hyper.hidden; }
};

/// Recurrent and head weights uniform in +-1/sqrt(H) (head: +-1/sqrt(2H)),
/// biases zero except the LSTM forget gate at 1. With `pretrained` the
/// embedding rows are copied from the table (zero for tokens it lacks,
/// and for pad/OOV) and frozen; otherwise they are uniform in +-0.5/dim,
/// row 0 zero, and trainable.
RNNModel init_model(CellKind kind, const RNNHyper& hyper, std::vector<std::string> vocab,
                    const embeddings::EmbeddingTable* pretrained, std::size_t embed_dim);

/// Training vocabulary for the embedding layer: every token, most frequent
/// first, ties alphabetical.
std::vector<std::string> sequence_vocabulary(std::span<const textprep::TokenSequence> docs);

/// P(Hate) per row. The forward cell reads positions 0..len-1, the backward
/// cell len-1..0; the head sees [h_fwd; h_bwd]. A zero-length row gives
/// sigmoid(head_b).
std::vector<double> bi_rnn_forward(const RNNModel& model, const SequenceBatch& batch);

/// Mean binary cross-entropy over the batch and its gradient with respect
/// to every parameter. The embedding gradient is left empty when the
/// embedding is frozen.
struct LossGradient {
  double loss = 0.0;
  RNNParams grad;
};
LossGradient loss_and_gradient(const RNNModel& model, const SequenceBatch& batch,
                               std::span<const std::size_t> rows = {});

double dataset_loss(const RNNModel& model, const SequenceBatch& batch);

/// Named flat views of parameter blocks in a fixed order: embedding (when
/// included), fwd.W, fwd.U, fwd.b, bwd.W, bwd.U, bwd.b, head_w, head_b.
struct ParamView {
  std::string name;
  std::span<double> values;
};
std::vector<ParamView> parameter_views(RNNParams& params, bool include_embedding);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean batch loss seen during each epoch
};

/// Mini-batch SGD with momentum over BPTT gradients, global gradient norm
/// clipped to hyper.clip_norm. Rows are reshuffled every epoch from
/// substream(seed, 20). Throws Error if the labels hold a single class or
/// the loss turns NaN (naming the epoch and batch).
RNNModel bptt_train(RNNModel model, const SequenceBatch& train, TrainLog* log = nullptr);

// -------------------------------------------------------------- checkpoints

/// "hatebench-rnn v1" line, a one-line JSON header (dims, hyperparameters,
/// vocabulary, param_count), then the parameters as little-endian doubles
/// in parameter_views order (embedding always included).
void save_checkpoint(std::ostream& out, const RNNModel& model);

struct CheckpointExpect {
  std::optional<CellKind> kind;
  std::optional<std::size_t> embed_dim;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> vocab_size;
};

/// Throws Error on a malformed header, an inconsistent or truncated blob, or
/// any dimension differing from `expect`.
RNNModel load_checkpoint(std::istream& in, const CheckpointExpect& expect = {});

}  // namespace hatebench::neural
