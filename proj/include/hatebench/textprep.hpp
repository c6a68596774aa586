#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hatebench/corpus.hpp"

namespace hatebench::textprep {

/// Cleaned, lemmatized tokens for one document.
struct TokenSequence {
  std::string doc_id;
  std::vector<std::string> tokens;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

class StopwordList {
 public:
  StopwordList() = default;
  /// Entries are lowercased; empty entries are dropped.
  explicit StopwordList(std::span<const std::string> words);

  /// One word per line, '#' starts a comment line.
  static StopwordList parse(std::string_view text);
  static StopwordList load(const std::filesystem::path& path);
  /// The 179-word English list shipped in data/stopwords.txt.
  static const StopwordList& bundled();

  bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct StripOptions {
  /// Keep "#tag" as "tag" instead of dropping the whole hashtag.
  bool keep_hashtag_text = false;
};

/// Removes @-mentions, hashtags, URLs (http://, https://, www.) and
/// standalone numbers, then joins what is left with single spaces.
///
/// Works per whitespace-separated token. A token's core is the token with
/// surrounding punctuation trimmed (a leading '@' or '#' is kept). The token
/// is dropped when its core matches one of
///   mention   ^@
///   hashtag   ^#
///   url       ^(https?://|www\.)      case-insensitive
///   number    ^[0-9]+([.,:][0-9]+)*$
/// Every other token passes through byte-for-byte.
std::string strip_patterns(std::string_view text, const StripOptions& options = {});

/// Lowercases, splits on Unicode whitespace and trims leading and trailing
/// punctuation from each token. Internal punctuation ("don't") survives.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens,
                                          const StopwordList& stoplist);

/// Rule-based English lemmatizer: an exception table for irregular forms,
/// then ordered suffix rules on purely alphabetic tokens
///   -ies/-ied   -> y  (ie when the word is 4 letters: dies, lied)
///   -sses       -> ss
///   -ches/-shes/-xes/-zzes -> drop "es"
///   -s          -> drop, unless -ss/-us/-is or the stem would be < 3 letters
///   -eed        -> ee when the stem has a vowel-consonant sequence
///   -ing/-ed    -> drop when the stem keeps a vowel, then repair the stem:
///                  -at/-bl/-iz gain an e, doubled consonants (except l, s, z)
///                  are undoubled, and short consonant-vowel-consonant stems
///                  gain an e (hoping -> hope)
/// A rule never empties a token.
class Lemmatizer {
 public:
  Lemmatizer();  // bundled exception table
  explicit Lemmatizer(std::unordered_map<std::string, std::string> exceptions);

  /// TSV `inflected<TAB>lemma`, '#' comments.
  static Lemmatizer parse(std::string_view text);
  static Lemmatizer load(const std::filesystem::path& path);
  static const Lemmatizer& bundled();

  std::string lemma(std::string_view token) const;
  std::vector<std::string> operator()(std::span<const std::string> tokens) const;

 private:
  std::unordered_map<std::string, std::string> exceptions_;
};

std::vector<std::string> lemmatize(std::span<const std::string> tokens);

struct CleanResult {
  TokenSequence sequence;
  bool empty_after_clean = false;
};

/// NFC -> strip_patterns -> tokenize -> remove_stopwords -> lemmatize.
class Pipeline {
 public:
  Pipeline();  // bundled stopwords and lemma table
  Pipeline(StopwordList stoplist, Lemmatizer lemmatizer, StripOptions options = {});

  CleanResult clean(const corpus::LabeledDocument& doc) const;
  CleanResult clean(std::string_view doc_id, std::string_view text) const;

  /// NFC -> strip_patterns -> tokenize. Stopwords such as "not" are kept,
  /// which is what sentiment scoring needs.
  std::vector<std::string> light_tokens(std::string_view text) const;

  const StripOptions& options() const { return options_; }

 private:
  StopwordList stoplist_;
  Lemmatizer lemmatizer_;
  StripOptions options_;
};

CleanResult clean_pipeline(const corpus::LabeledDocument& doc, const StopwordList& stoplist);

}  // namespace hatebench::textprep
