#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hatebench/feature_matrix.hpp"
#include "hatebench/textprep.hpp"

namespace hatebench::features {

using textprep::TokenSequence;

/// n-gram -> multiplicity. N-grams are tokens joined by single spaces.
using NgramCounts = std::map<std::string, std::size_t, std::less<>>;

/// All contiguous n-grams for n in [n_min, n_max]. Throws Error unless
/// 1 <= n_min <= n_max.
NgramCounts extract_ngrams(std::span<const std::string> tokens, int n_min, int n_max);

/// How fit_vocabulary ranks candidate n-grams.
enum class VocabRanking {
  TotalFrequency,     ///< sum of multiplicities over the corpus (default)
  DocumentFrequency,  ///< number of documents containing the n-gram
};

/// Fitted n-gram feature space. Immutable once built: transforming a
/// document never changes it.
class NgramVocabulary {
 public:
  NgramVocabulary() = default;
  NgramVocabulary(std::vector<std::string> entries, std::vector<std::size_t> doc_freq, int n_min,
                  int n_max, std::size_t max_features, std::size_t corpus_size);

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }
  std::size_t max_features() const { return max_features_; }
  std::size_t corpus_size() const { return corpus_size_; }

  std::optional<std::size_t> index_of(std::string_view ngram) const;

  /// Header line `# n_min=<a> n_max=<b> N=<n> max_features=<m>`, then one
  /// `ngram<TAB>index<TAB>doc_freq` line per entry in index order.
  void save(std::ostream& out) const;
  static NgramVocabulary load(std::istream& in);

  friend bool operator==(const NgramVocabulary& a, const NgramVocabulary& b) {
    return a.entries_ == b.entries_ && a.doc_freq_ == b.doc_freq_ && a.n_min_ == b.n_min_ &&
           a.n_max_ == b.n_max_ && a.max_features_ == b.max_features_ &&
           a.corpus_size_ == b.corpus_size_;
  }

 private:
  std::vector<std::string> entries_;
  std::vector<std::size_t> doc_freq_;
  std::unordered_map<std::string, std::size_t> index_;
  int n_min_ = 1;
  int n_max_ = 1;
  std::size_t max_features_ = 0;
  std::size_t corpus_size_ = 0;
};

/// Keeps the max_features highest-ranked n-grams. Ties on the ranking key go
/// to the higher document frequency, then to the lexicographically smaller
/// n-gram. Throws Error on an empty corpus.
NgramVocabulary fit_vocabulary(std::span<const TokenSequence> corpus, int n_min, int n_max,
                               std::size_t max_features,
                               VocabRanking ranking = VocabRanking::TotalFrequency);

/// Raw n-gram counts in vocabulary order; out-of-vocabulary n-grams ignored.
std::vector<double> bow_transform(std::span<const std::string> tokens, const NgramVocabulary& vocab);

/// Smoothed inverse document frequency, idf_j = ln((1 + N) / (1 + df_j)) + 1.
struct IdfWeights {
  std::vector<double> weights;
};

IdfWeights compute_idf(const NgramVocabulary& vocab);

/// count_j * idf_j, then the row is scaled to unit L2 norm. All-zero rows stay zero.
std::vector<double> tfidf_transform(std::span<const std::string> tokens, const NgramVocabulary& vocab,
                                    const IdfWeights& idf);

/// Column labels "ngram:<entry>".
std::vector<std::string> ngram_labels(const NgramVocabulary& vocab);

FeatureMatrix bow_matrix(std::span<const TokenSequence> docs, const NgramVocabulary& vocab);
FeatureMatrix tfidf_matrix(std::span<const TokenSequence> docs, const NgramVocabulary& vocab,
                           const IdfWeights& idf);

/// word -> polarity in [-1, 1].
class SentimentLexicon {
 public:
  SentimentLexicon() = default;
  /// Throws Error if a polarity lies outside [-1, 1].
  explicit SentimentLexicon(std::unordered_map<std::string, double> polarity);

  /// TSV `word<TAB>polarity`, '#' comments.
  static SentimentLexicon parse(std::string_view text);
  static SentimentLexicon load(const std::filesystem::path& path);
  /// data/sentiment_lexicon.tsv: mean per-form polarity from the public-domain
  /// TextBlob/Pattern English adjective lexicon (1,520 forms).
  static const SentimentLexicon& bundled();

  std::optional<double> polarity(std::string_view word) const;
  std::size_t size() const { return polarity_.size(); }

 private:
  std::unordered_map<std::string, double> polarity_;
};

using NegatorSet = std::unordered_set<std::string>;

/// not, no, never, n't contractions and similar.
const NegatorSet& default_negators();

/// Mean polarity over lexicon words; a word directly after a negator has its
/// sign flipped. 0.0 when no word matches.
double sentiment_score(std::span<const std::string> tokens, const SentimentLexicon& lexicon,
                       const NegatorSet& negators = default_negators());

/// One "sentiment" column.
FeatureMatrix sentiment_matrix(std::span<const TokenSequence> docs, const SentimentLexicon& lexicon,
                               const NegatorSet& negators = default_negators());

}  // namespace hatebench::features
