#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hatebench/feature_matrix.hpp"
#include "hatebench/features.hpp"
#include "hatebench/rng.hpp"
#include "test_util.hpp"

using namespace hatebench;
using namespace hatebench::features;
using Tokens = std::vector<std::string>;

namespace {

std::vector<TokenSequence> docs_from(std::initializer_list<std::string> texts) {
  std::vector<TokenSequence> out;
  int i = 0;
  for (const auto& t : texts) {
    TokenSequence s;
    s.doc_id = "d" + std::to_string(i++);
    std::istringstream in(t);
    for (std::string w; in >> w;) s.tokens.push_back(w);
    out.push_back(std::move(s));
  }
  return out;
}

// Brute-force n-gram counting, independent of extract_ngrams.
std::map<std::string, std::size_t> brute_ngrams(const Tokens& t, int lo, int hi) {
  std::map<std::string, std::size_t> out;
  for (int n = lo; n <= hi; ++n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i) {
      std::string g = t[i];
      for (int k = 1; k < n; ++k) g += " " + t[i + static_cast<std::size_t>(k)];
      ++out[g];
    }
  }
  return out;
}

SentimentLexicon test_lexicon() {
  return SentimentLexicon({{"good", 1.0}, {"great", 0.8}, {"fine", 0.25}, {"happy", 0.5},
                           {"bad", -1.0}, {"awful", -0.8}, {"sad", -0.5}});
}

}  // namespace

TEST(Ngrams, Definition) {
  const auto g = extract_ngrams(Tokens{"a", "b", "c"}, 1, 2);
  const NgramCounts expected{{"a", 1}, {"b", 1}, {"c", 1}, {"a b", 1}, {"b c", 1}};
  EXPECT_EQ(g, expected);
  EXPECT_TRUE(extract_ngrams(Tokens{"a"}, 2, 3).empty());
  EXPECT_EQ(extract_ngrams(Tokens{"a", "a"}, 1, 1), (NgramCounts{{"a", 2}}));
  EXPECT_THROW(extract_ngrams(Tokens{"a"}, 0, 1), Error);
  EXPECT_THROW(extract_ngrams(Tokens{"a"}, 3, 2), Error);
}

TEST(Ngrams, MatchBruteForceOnRandomSequences) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Tokens t;
    const auto len = rng.below(12);
    for (std::uint64_t i = 0; i < len; ++i) t.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
    const auto got = extract_ngrams(t, 1, 6);
    const auto want = brute_ngrams(t, 1, 6);
    const std::map<std::string, std::size_t> flat(got.begin(), got.end());
    EXPECT_EQ(flat, want);
  }
}

// Ranking oracle: sort every distinct n-gram by (-total, -df, text).
TEST(Vocabulary, MatchesBruteForceRanking) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<TokenSequence> corpus;
    const auto n_docs = 1 + rng.below(6);
    for (std::uint64_t d = 0; d < n_docs; ++d) {
      TokenSequence s;
      s.doc_id = std::to_string(d);
      const auto len = rng.below(7);
      for (std::uint64_t i = 0; i < len; ++i) s.tokens.push_back(std::string(1, static_cast<char>('a' + rng.below(5))));
      corpus.push_back(std::move(s));
    }
    const int hi = 1 + static_cast<int>(rng.below(3));
    const std::size_t cap = 1 + rng.below(8);
    std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // total, df
    for (const auto& doc : corpus) {
      for (const auto& [g, c] : brute_ngrams(doc.tokens, 1, hi)) {
        stats[g].first += c;
        stats[g].second += 1;
      }
    }
    std::vector<std::string> order;
    for (const auto& [g, s] : stats) order.push_back(g);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      if (stats[a].first != stats[b].first) return stats[a].first > stats[b].first;
      if (stats[a].second != stats[b].second) return stats[a].second > stats[b].second;
      return a < b;
    });
    if (order.size() > cap) order.resize(cap);
    const auto vocab = fit_vocabulary(corpus, 1, hi, cap);
    ASSERT_EQ(vocab.entries(), order);
    for (std::size_t j = 0; j < order.size(); ++j) EXPECT_EQ(vocab.doc_freq()[j], stats[order[j]].second);
    EXPECT_EQ(vocab.corpus_size(), corpus.size());
  }
}

TEST(Vocabulary, KeepsAllWhenCapIsLarge) {
  const auto corpus = docs_from({"a b", "c d e"});
  EXPECT_EQ(fit_vocabulary(corpus, 1, 1, 100).size(), 5u);
  EXPECT_EQ(fit_vocabulary(corpus, 1, 1, 100), fit_vocabulary(corpus, 1, 1, 100));
  EXPECT_THROW(fit_vocabulary(std::vector<TokenSequence>{}, 1, 1, 10), Error);
}

TEST(Vocabulary, DocumentFrequencyRanking) {
  // "a" is most frequent in total, "b" appears in more documents.
  const auto corpus = docs_from({"a a a a b", "b", "b"});
  EXPECT_EQ(fit_vocabulary(corpus, 1, 1, 1, VocabRanking::TotalFrequency).entries(), (Tokens{"a"}));
  EXPECT_EQ(fit_vocabulary(corpus, 1, 1, 1, VocabRanking::DocumentFrequency).entries(), (Tokens{"b"}));
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto vocab = fit_vocabulary(docs_from({"the cat sat", "the dog ran", "a cat ran"}), 1, 2, 6);
  std::stringstream buf;
  vocab.save(buf);
  EXPECT_EQ(buf.str().substr(0, 2), "# ");
  EXPECT_EQ(NgramVocabulary::load(buf), vocab);
}

TEST(Bow, HandCountedFiveDocFixture) {
  const auto corpus = docs_from({"a b a", "b c", "a a a", "c", "b a b"});
  const auto vocab = fit_vocabulary(corpus, 1, 2, 5);
  ASSERT_EQ(vocab.entries(), (Tokens{"a", "b", "a b", "b a", "c"}));
  const std::vector<std::vector<double>> expected{
      {2, 1, 1, 1, 0}, {0, 1, 0, 0, 1}, {3, 0, 0, 0, 0}, {0, 0, 0, 0, 1}, {1, 2, 1, 1, 0}};
  const auto m = bow_matrix(corpus, vocab);
  ASSERT_EQ(m.rows(), 5u);
  ASSERT_EQ(m.cols(), 5u);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(m.at(r, c), expected[r][c]) << r << "," << c;
  }
  EXPECT_EQ(m.column_labels()[2], "ngram:a b");
}

TEST(Bow, CountsAndOov) {
  const auto vocab = fit_vocabulary(docs_from({"cat dog"}), 1, 1, 10);
  EXPECT_EQ(bow_transform(Tokens{"cat", "cat"}, vocab), (std::vector<double>{2, 0}));
  EXPECT_EQ(bow_transform(Tokens{"zebra"}, vocab), (std::vector<double>{0, 0}));
}

TEST(Bow, ColumnSumsEqualFittedFrequency) {
  const auto corpus = docs_from({"x y x z", "y y q", "x q q q", "z"});
  const auto vocab = fit_vocabulary(corpus, 1, 2, 4);
  const auto m = bow_matrix(corpus, vocab);
  std::map<std::string, std::size_t> totals;
  for (const auto& d : corpus) {
    for (const auto& [g, c] : brute_ngrams(d.tokens, 1, 2)) totals[g] += c;
  }
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    double sum = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) sum += m.at(r, j);
    EXPECT_EQ(sum, static_cast<double>(totals[vocab.entries()[j]]));
  }
}

TEST(Idf, SmoothedFormula) {
  const NgramVocabulary v({"a", "b"}, {2, 3}, 1, 1, 10, 3);
  const auto idf = compute_idf(v);
  EXPECT_NEAR(idf.weights[0], 1.287682072451781, 1e-12);
  EXPECT_EQ(idf.weights[1], 1.0);
  const NgramVocabulary single({"a"}, {1}, 1, 1, 10, 1);
  EXPECT_EQ(compute_idf(single).weights[0], 1.0);
}

// Oracle: count * (ln((1+N)/(1+df)) + 1), then divide by the row's L2 norm.
TEST(Tfidf, ThreeDocFixtureMatchesOracle) {
  const auto corpus = docs_from({"cat sat", "cat ran", "dog ran"});
  const auto vocab = fit_vocabulary(corpus, 1, 1, 1000);
  const auto m = tfidf_matrix(corpus, vocab, compute_idf(vocab));
  ASSERT_EQ(m.cols(), 4u);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> row(4, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      const std::string& term = vocab.entries()[j];
      double count = 0;
      int df = 0;
      for (std::size_t d = 0; d < 3; ++d) {
        const bool has = std::count(corpus[d].tokens.begin(), corpus[d].tokens.end(), term) > 0;
        df += has ? 1 : 0;
      }
      count = static_cast<double>(std::count(corpus[r].tokens.begin(), corpus[r].tokens.end(), term));
      row[j] = count * (std::log(4.0 / (1.0 + df)) + 1.0);
    }
    double norm = 0;
    for (const double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(m.at(r, j), row[j] / norm, 1e-12);
  }
}

TEST(Tfidf, SingleEntryAndZeroRows) {
  const NgramVocabulary v({"a"}, {1}, 1, 1, 10, 1);
  const auto idf = compute_idf(v);
  EXPECT_EQ(tfidf_transform(Tokens{"a"}, v, idf), (std::vector<double>{1.0}));
  const auto zero = tfidf_transform(Tokens{"b"}, v, idf);
  EXPECT_EQ(zero, (std::vector<double>{0.0}));
}

TEST(Tfidf, RowNormsAreZeroOrOne) {
  const auto corpus = docs_from({"a b c a", "b b", "zzz", "c a b", ""});
  const auto vocab = fit_vocabulary(corpus, 1, 3, 6);
  const auto m = tfidf_matrix(corpus, vocab, compute_idf(vocab));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double n = 0;
    for (const double v : m.row(r)) n += v * v;
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-12) << n;
  }
}

TEST(Tfidf, TransformDoesNotChangeVocabulary) {
  const auto train = docs_from({"a b", "b c"});
  const auto vocab = fit_vocabulary(train, 1, 2, 10);
  const NgramVocabulary copy = vocab;
  const auto test = docs_from({"c d e", "a a a"});
  (void)tfidf_matrix(test, vocab, compute_idf(vocab));
  (void)bow_matrix(test, vocab);
  EXPECT_EQ(vocab, copy);
}

TEST(Sentiment, SpecExamples) {
  const auto lex = test_lexicon();
  EXPECT_EQ(sentiment_score(Tokens{"good", "good"}, lex), 1.0);
  EXPECT_EQ(sentiment_score(Tokens{"good", "bad"}, lex), 0.0);
  EXPECT_EQ(sentiment_score(Tokens{"not", "good"}, lex), -1.0);
  EXPECT_EQ(sentiment_score(Tokens{"nothing", "here"}, lex), 0.0);
}

TEST(Sentiment, HandScoredPhraseFixture) {
  const auto lex = test_lexicon();
  std::ifstream in(hbtest::fixture("sentiment_phrases.tsv"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.starts_with('#')) continue;
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const std::string phrase = line.substr(0, tab);
    const double expected = std::stod(line.substr(tab + 1));
    EXPECT_NEAR(sentiment_score(textprep::tokenize(phrase), lex), expected, 1e-12) << phrase;
    ++n;
  }
  EXPECT_EQ(n, 30u);
}

TEST(Sentiment, PermutationInvariantWithoutNegators) {
  const auto lex = test_lexicon();
  Tokens t{"good", "sad", "cat", "awful", "fine", "happy"};
  const double base = sentiment_score(t, lex);
  std::sort(t.begin(), t.end());
  do {
    EXPECT_NEAR(sentiment_score(t, lex), base, 1e-15);
  } while (std::next_permutation(t.begin(), t.end()));
}

TEST(Sentiment, LexiconValidation) {
  EXPECT_THROW(SentimentLexicon({{"x", 1.5}}), Error);
  const auto parsed = SentimentLexicon::parse("# c\ngood\t0.7\nbad\t-0.7\n");
  EXPECT_EQ(parsed.size(), 2u);
  EXPECT_EQ(*parsed.polarity("good"), 0.7);
  EXPECT_FALSE(parsed.polarity("meh").has_value());
}

TEST(Sentiment, BundledLexicon) {
  const auto& lex = SentimentLexicon::bundled();
  EXPECT_EQ(lex.size(), 1520u);
  ASSERT_TRUE(lex.polarity("good").has_value());
  EXPECT_GT(*lex.polarity("good"), 0.0);
  ASSERT_TRUE(lex.polarity("bad").has_value());
  EXPECT_LT(*lex.polarity("bad"), 0.0);
}

TEST(Concat, WidthsAndProvenance) {
  const auto corpus = docs_from({"a b", "b c", "c a"});
  const auto vocab = fit_vocabulary(corpus, 1, 1, 1000);
  const auto tfidf = tfidf_matrix(corpus, vocab, compute_idf(vocab));
  const auto sent = sentiment_matrix(corpus, test_lexicon());
  FeatureMatrix d2v({"d0", "d1", "d2"}, {"doc2vec:0", "doc2vec:1"});
  d2v.at(1, 1) = 3.5;
  const std::vector<FeatureMatrix> parts{tfidf, d2v, sent};
  const auto all = concat_features(parts);
  EXPECT_EQ(all.cols(), 3u + 2u + 1u);
  EXPECT_EQ(slice_columns(all, "ngram:"), tfidf);
  EXPECT_EQ(slice_columns(all, "doc2vec:"), d2v);
  EXPECT_EQ(slice_columns(all, "sentiment"), sent);
  const std::vector<FeatureMatrix> single{tfidf};
  EXPECT_EQ(concat_features(single), tfidf);
}

TEST(Concat, PaperWidths) {
  std::vector<std::string> ids{"x"};
  auto labels = [](const std::string& p, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(p + std::to_string(i));
    return out;
  };
  const FeatureMatrix ngram(ids, labels("ngram:", 1000));
  const FeatureMatrix d2v(ids, labels("doc2vec:", 500));
  const FeatureMatrix sent(ids, {"sentiment"});
  const std::vector<FeatureMatrix> a{ngram, d2v, sent};
  const std::vector<FeatureMatrix> b{ngram, sent};
  EXPECT_EQ(concat_features(a).cols(), 1501u);
  EXPECT_EQ(concat_features(b).cols(), 1001u);
}

TEST(Concat, Mismatches) {
  const FeatureMatrix a({"d0", "d1"}, {"x"});
  const FeatureMatrix b({"d0"}, {"y"});
  const FeatureMatrix c({"d1", "d0"}, {"y"});
  const FeatureMatrix dup({"d0", "d1"}, {"x"});
  EXPECT_THROW(concat_features(std::vector<FeatureMatrix>{a, b}), Error);
  EXPECT_THROW(concat_features(std::vector<FeatureMatrix>{a, c}), Error);
  EXPECT_THROW(concat_features(std::vector<FeatureMatrix>{a, dup}), Error);
}

TEST(FeatureCsv, RoundTripIsExact) {
  auto m = FeatureMatrix::from_rows({{0.1, 1e-300, -2.5}, {1.0 / 3.0, 0.0, 12345678.9}});
  const std::vector<Label> labels{Label::Hate, Label::NonHate};
  std::stringstream buf;
  write_feature_csv(buf, m, std::span<const Label>(labels));
  const auto back = read_feature_csv(buf);
  EXPECT_EQ(back.matrix, m);
  EXPECT_EQ(back.labels, labels);
}
