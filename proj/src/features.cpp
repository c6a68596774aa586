#include "hatebench/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hatebench/resources.hpp"

namespace hatebench::features {

NgramCounts extract_ngrams(std::span<const std::string> tokens, int n_min, int n_max) {
  if (n_min < 1 || n_min > n_max) {
    throw Error("n-gram range must satisfy 1 <= n_min <= n_max, got " + std::to_string(n_min) + ".." +
                std::to_string(n_max));
  }
  NgramCounts counts;
  std::string gram;
  for (int n = n_min; n <= n_max; ++n) {
    const auto len = static_cast<std::size_t>(n);
    if (tokens.size() < len) break;
    for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
      gram = tokens[i];
      for (std::size_t k = 1; k < len; ++k) {
        gram.push_back(' ');
        gram += tokens[i + k];
      }
      ++counts[gram];
    }
  }
  return counts;
}

NgramVocabulary::NgramVocabulary(std::vector<std::string> entries, std::vector<std::size_t> doc_freq,
                                 int n_min, int n_max, std::size_t max_features, std::size_t corpus_size)
    : entries_(std::move(entries)),
      doc_freq_(std::move(doc_freq)),
      n_min_(n_min),
      n_max_(n_max),
      max_features_(max_features),
      corpus_size_(corpus_size) {
  if (entries_.size() != doc_freq_.size()) throw Error("vocabulary: entry/doc_freq length mismatch");
  if (entries_.size() > max_features_) throw Error("vocabulary: more entries than max_features");
  if (n_min_ < 1 || n_min_ > n_max_) throw Error("vocabulary: invalid n-gram range");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (doc_freq_[i] < 1) throw Error("vocabulary: doc_freq must be >= 1 for '" + entries_[i] + "'");
    if (!index_.emplace(entries_[i], i).second) throw Error("vocabulary: duplicate entry '" + entries_[i] + "'");
  }
}

std::optional<std::size_t> NgramVocabulary::index_of(std::string_view ngram) const {
  const auto it = index_.find(std::string(ngram));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void NgramVocabulary::save(std::ostream& out) const {
  out << "# n_min=" << n_min_ << " n_max=" << n_max_ << " N=" << corpus_size_
      << " max_features=" << max_features_ << '\n';
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out << entries_[i] << '\t' << i << '\t' << doc_freq_[i] << '\n';
  }
}

NgramVocabulary NgramVocabulary::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("vocabulary: empty input");
  int n_min = 0;
  int n_max = 0;
  std::size_t n = 0;
  std::size_t max_features = 0;
  if (std::sscanf(header.c_str(), "# n_min=%d n_max=%d N=%zu max_features=%zu", &n_min, &n_max, &n,
                  &max_features) != 4) {
    throw Error("vocabulary: malformed header line '" + header + "'");
  }
  std::vector<std::string> entries;
  std::vector<std::size_t> doc_freq;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw Error("vocabulary: line " + std::to_string(line_no) + " needs 3 fields");
    const std::size_t index = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
    if (index != entries.size()) throw Error("vocabulary: non-contiguous index at line " + std::to_string(line_no));
    entries.push_back(line.substr(0, t1));
    doc_freq.push_back(std::stoul(line.substr(t2 + 1)));
  }
  return NgramVocabulary(std::move(entries), std::move(doc_freq), n_min, n_max, max_features, n);
}

NgramVocabulary fit_vocabulary(std::span<const TokenSequence> corpus, int n_min, int n_max,
                               std::size_t max_features, VocabRanking ranking) {
  if (corpus.empty()) throw Error("fit_vocabulary: empty corpus");
  struct Stats {
    std::size_t total = 0;
    std::size_t docs = 0;
  };
  std::unordered_map<std::string, Stats> stats;
  for (const auto& doc : corpus) {
    for (const auto& [gram, count] : extract_ngrams(doc.tokens, n_min, n_max)) {
      Stats& s = stats[gram];
      s.total += count;
      s.docs += 1;
    }
  }

  struct Candidate {
    const std::string* gram;
    Stats s;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(stats.size());
  for (const auto& [gram, s] : stats) candidates.push_back({&gram, s});

  const bool by_total = ranking == VocabRanking::TotalFrequency;
  auto better = [by_total](const Candidate& a, const Candidate& b) {
    const std::size_t ka = by_total ? a.s.total : a.s.docs;
    const std::size_t kb = by_total ? b.s.total : b.s.docs;
    if (ka != kb) return ka > kb;
    if (a.s.docs != b.s.docs) return a.s.docs > b.s.docs;
    if (a.s.total != b.s.total) return a.s.total > b.s.total;
    return *a.gram < *b.gram;
  };
  const std::size_t keep = std::min(max_features, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep), candidates.end(), better);

  std::vector<std::string> entries;
  std::vector<std::size_t> doc_freq;
  entries.reserve(keep);
  doc_freq.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    entries.push_back(*candidates[i].gram);
    doc_freq.push_back(candidates[i].s.docs);
  }
  return NgramVocabulary(std::move(entries), std::move(doc_freq), n_min, n_max, max_features, corpus.size());
}

std::vector<double> bow_transform(std::span<const std::string> tokens, const NgramVocabulary& vocab) {
  std::vector<double> row(vocab.size(), 0.0);
  for (const auto& [gram, count] : extract_ngrams(tokens, vocab.n_min(), vocab.n_max())) {
    if (const auto idx = vocab.index_of(gram)) row[*idx] += static_cast<double>(count);
  }
  return row;
}

IdfWeights compute_idf(const NgramVocabulary& vocab) {
  IdfWeights idf;
  idf.weights.reserve(vocab.size());
  const double n = static_cast<double>(vocab.corpus_size());
  for (const std::size_t df : vocab.doc_freq()) {
    idf.weights.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
  }
  return idf;
}

std::vector<double> tfidf_transform(std::span<const std::string> tokens, const NgramVocabulary& vocab,
                                    const IdfWeights& idf) {
  if (idf.weights.size() != vocab.size()) throw Error("tfidf_transform: idf does not match vocabulary");
  std::vector<double> row = bow_transform(tokens, vocab);
  double norm2 = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] *= idf.weights[j];
    norm2 += row[j] * row[j];
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : row) v *= inv;
  }
  return row;
}

std::vector<std::string> ngram_labels(const NgramVocabulary& vocab) {
  std::vector<std::string> labels;
  labels.reserve(vocab.size());
  for (const auto& e : vocab.entries()) labels.push_back("ngram:" + e);
  return labels;
}

namespace {

std::vector<std::string> ids_of(std::span<const TokenSequence> docs) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.doc_id);
  return ids;
}

template <class RowFn>
FeatureMatrix build(std::span<const TokenSequence> docs, std::vector<std::string> labels, RowFn&& fn) {
  FeatureMatrix m(ids_of(docs), std::move(labels));
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const std::vector<double> row = fn(docs[r].tokens);
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

FeatureMatrix bow_matrix(std::span<const TokenSequence> docs, const NgramVocabulary& vocab) {
  return build(docs, ngram_labels(vocab), [&](const auto& tokens) { return bow_transform(tokens, vocab); });
}

FeatureMatrix tfidf_matrix(std::span<const TokenSequence> docs, const NgramVocabulary& vocab,
                           const IdfWeights& idf) {
  return build(docs, ngram_labels(vocab),
               [&](const auto& tokens) { return tfidf_transform(tokens, vocab, idf); });
}

// ---------------------------------------------------------------- sentiment

SentimentLexicon::SentimentLexicon(std::unordered_map<std::string, double> polarity)
    : polarity_(std::move(polarity)) {
  for (const auto& [word, value] : polarity_) {
    if (!(value >= -1.0 && value <= 1.0)) {
      throw Error("sentiment lexicon: polarity of '" + word + "' outside [-1, 1]");
    }
  }
}

SentimentLexicon SentimentLexicon::parse(std::string_view text) {
  std::unordered_map<std::string, double> table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error("sentiment lexicon: line " + std::to_string(line_no) + " is not 'word<TAB>polarity'");
    }
    table[line.substr(0, tab)] = parse_double(std::string_view(line).substr(tab + 1));
  }
  return SentimentLexicon(std::move(table));
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const SentimentLexicon& SentimentLexicon::bundled() {
  static const SentimentLexicon lexicon = parse(resources::sentiment_lexicon());
  return lexicon;
}

std::optional<double> SentimentLexicon::polarity(std::string_view word) const {
  const auto it = polarity_.find(std::string(word));
  if (it == polarity_.end()) return std::nullopt;
  return it->second;
}

const NegatorSet& default_negators() {
  static const NegatorSet negators{
      "not",    "no",       "never",   "nor",      "none",     "nobody",  "nothing",
      "neither", "nowhere", "cannot",  "can't",    "don't",    "doesn't", "didn't",
      "isn't",  "wasn't",   "aren't",  "weren't",  "won't",    "wouldn't", "shouldn't",
      "couldn't", "ain't",  "hasn't",  "haven't",  "hadn't",   "mustn't", "needn't",
  };
  return negators;
}

double sentiment_score(std::span<const std::string> tokens, const SentimentLexicon& lexicon,
                       const NegatorSet& negators) {
  double sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto p = lexicon.polarity(tokens[i]);
    if (!p) continue;
    const bool negated = i > 0 && negators.contains(tokens[i - 1]);
    sum += negated ? -*p : *p;
    ++matched;
  }
  return matched == 0 ? 0.0 : sum / static_cast<double>(matched);
}

FeatureMatrix sentiment_matrix(std::span<const TokenSequence> docs, const SentimentLexicon& lexicon,
                               const NegatorSet& negators) {
  return build(docs, {"sentiment"}, [&](const auto& tokens) {
    return std::vector<double>{sentiment_score(tokens, lexicon, negators)};
  });
}

}  // namespace hatebench::features
