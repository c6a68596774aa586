#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hatebench/feature_matrix.hpp"
#include "hatebench/rng.hpp"
#include "hatebench/textprep.hpp"

namespace hatebench::embeddings {

using textprep::TokenSequence;

/// token -> dense vector, all of length dim.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::string source);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::span<const double> vector(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  /// nullptr when absent.
  const double* find(std::string_view token) const;

  /// Throws Error on a duplicate token or a length mismatch.
  void add(std::string token, std::span<const double> values);

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.tokens_ == b.tokens_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::string source_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// --------------------------------------------------------- negative sampling

/// Loss and gradients of one negative-sampling prediction
///   L = -log s(pos . h) - sum_k log s(-neg_k . h),  s = logistic sigmoid.
struct SgnsGradient {
  double loss = 0.0;
  std::vector<double> d_input;                  // dL/dh
  std::vector<double> d_positive;               // dL/d pos
  std::vector<std::vector<double>> d_negatives; // dL/d neg_k
};

SgnsGradient sgns_loss_grad(std::span<const double> input, std::span<const double> positive,
                            const std::vector<std::span<const double>>& negatives);

/// PV-DM objective for one position: h is the mean of the document vector and
/// the context word vectors, scored with sgns against the target word.
struct PvdmGradient {
  double loss = 0.0;
  std::vector<double> d_doc;  // dL/d doc vector
};

PvdmGradient pvdm_loss_grad(std::span<const double> doc_vector,
                            const std::vector<std::span<const double>>& context_words,
                            std::span<const double> target,
                            const std::vector<std::span<const double>>& negatives);

/// Draws word ids from the unigram distribution raised to the 0.75 power.
class NoiseSampler {
 public:
  explicit NoiseSampler(std::span<const std::size_t> counts);
  std::size_t sample(SplitMix64& rng) const;

 private:
  std::vector<double> cumulative_;
};

// ------------------------------------------------------------------ word2vec

struct Word2VecParams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  double lr_start = 0.025;
  double lr_end = 1e-4;
  std::size_t min_count = 2;
  std::uint64_t seed = 1;
};

/// Tokens with count >= min_count, most frequent first, ties alphabetical.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  std::unordered_map<std::string, std::size_t> index;
};

Vocabulary build_vocabulary(std::span<const TokenSequence> corpus, std::size_t min_count);

/// `rows` x `dim` values uniform in [-0.5/dim, 0.5/dim] from substream
/// (seed, stream). Word vectors use stream 0, document vectors stream 2.
std::vector<double> init_vectors(std::size_t rows, std::size_t dim, std::uint64_t seed, std::uint64_t stream);

/// Skip-gram with negative sampling: each word predicts the words within
/// `window` positions of it. Linear learning-rate decay from lr_start to
/// lr_end over all epochs. Single-threaded and bit-deterministic per seed.
/// Throws Error on an empty corpus or a vocabulary with fewer than 2 words.
EmbeddingTable train_word2vec(std::span<const TokenSequence> corpus, const Word2VecParams& params);

// ------------------------------------------------------------------- doc2vec

struct Doc2VecParams {
  std::size_t dim = 500;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  double lr_start = 0.025;
  double lr_end = 1e-4;
  std::size_t min_count = 2;
  std::uint64_t seed = 1;
  std::size_t infer_steps = 50;
};

/// Paragraph-vector model (distributed memory variant).
struct DocEmbeddingModel {
  Doc2VecParams params;
  Vocabulary vocab;
  std::vector<double> word_in;   // vocab x dim
  std::vector<double> word_out;  // vocab x dim
  std::vector<std::string> doc_ids;
  std::vector<double> doc_vectors;  // docs x dim

  bool trained() const { return !vocab.tokens.empty(); }
  std::size_t dim() const { return params.dim; }
  std::span<const double> doc_vector(std::size_t i) const { return {doc_vectors.data() + i * dim(), dim()}; }
};

/// PV-DM: the prediction context for a word is the mean of the document
/// vector and the in-window word vectors; negative-sampling objective.
/// Throws Error on an empty corpus.
DocEmbeddingModel train_doc2vec(std::span<const TokenSequence> corpus, const Doc2VecParams& params);

struct InferredVector {
  std::vector<double> values;
  bool empty = false;  // no in-vocabulary tokens; values are all zero
};

/// Optimizes a fresh document vector for `steps` passes over the tokens with
/// the word matrices frozen. steps = 0 returns the seeded initial vector.
/// Throws Error if the model is untrained.
InferredVector infer_doc_vector(const DocEmbeddingModel& model, std::span<const std::string> tokens,
                                std::size_t steps, std::uint64_t seed);

// ---------------------------------------------------------------- file I/O

/// Word-vector text format: optional "V D" header line, then `token v1 .. vD`.
/// Throws Error naming the line for wrong arity, inconsistent dimensions, a
/// duplicate token, or an expected_dim mismatch; ConfigError if unreadable.
EmbeddingTable load_glove(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = {});
EmbeddingTable read_glove(std::istream& in, std::optional<std::size_t> expected_dim = {});

/// Values at 6 significant digits.
void write_glove(std::ostream& out, const EmbeddingTable& table, bool header = false);

/// Deterministic stand-in for a pretrained word-vector file: each token's
/// vector depends only on (seed, token). GloVe layout, no header.
void write_fake_word_vectors(std::ostream& out, std::span<const std::string> tokens, std::size_t dim,
                             std::uint64_t seed);

struct SentenceEmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::string> ids;  // file order
  std::unordered_map<std::string, std::vector<double>> rows;
};

/// "N D" header, then N lines `doc_id v1 .. vD`. Throws Error on ragged rows,
/// duplicate ids, or a row count that differs from N.
SentenceEmbeddingSet load_sentence_embeddings(const std::filesystem::path& path);
SentenceEmbeddingSet read_sentence_embeddings(std::istream& in);

void write_sentence_embeddings(std::ostream& out, const SentenceEmbeddingSet& set);

/// Seeded pseudo-random unit vectors, same format as the exporter writes.
void write_fake_sentence_embeddings(std::ostream& out, std::span<const std::string> ids, std::size_t dim,
                                    std::uint64_t seed);

/// Rows for `ids` in that order, columns "<prefix>:<k>". Throws Error naming
/// the first id the set lacks.
FeatureMatrix sentence_matrix(const SentenceEmbeddingSet& set, std::span<const std::string> ids,
                              std::string_view prefix = "sent2vec");

}  // namespace hatebench::embeddings
