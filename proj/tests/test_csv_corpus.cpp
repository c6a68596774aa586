#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "hatebench/corpus.hpp"
#include "hatebench/csv.hpp"
#include "hatebench/rng.hpp"
#include "test_util.hpp"

using namespace hatebench;
using corpus::LabeledDocument;

namespace {

std::vector<LabeledDocument> make_docs(std::size_t n, std::size_t hate_every = 2) {
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back({"d" + std::to_string(i), "text " + std::to_string(i),
                    i % hate_every == 0 ? Label::Hate : Label::NonHate});
  }
  return docs;
}

std::multiset<std::string> ids(const std::vector<LabeledDocument>& docs) {
  std::multiset<std::string> out;
  for (const auto& d : docs) out.insert(d.id);
  return out;
}

}  // namespace

// Reference outputs of SplitMix64 seeded with 0 (Vigna's splitmix64.c).
TEST(Rng, MatchesReferenceSequence) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(Rng, BelowStaysInRange) {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(Csv, QuotedCommasQuotesAndNewlines) {
  std::istringstream in("a,b\n\"x, y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\r\n");
  const auto t = csv::read(in);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x, y");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][0], "multi\nline");
  EXPECT_EQ(t.rows[1][1], "z");
  EXPECT_TRUE(t.skipped.empty());
}

TEST(Csv, MalformedRowsAreSkippedWithRecordNumber) {
  std::istringstream in("a,b\n1,2\n1,2,3\n\"bad\"x,4\n5,6\n");
  const auto t = csv::read(in);
  ASSERT_EQ(t.rows.size(), 2u);
  ASSERT_EQ(t.skipped.size(), 2u);
  EXPECT_EQ(t.skipped[0].record, 2u);
  EXPECT_EQ(t.skipped[1].record, 3u);
}

TEST(Csv, WriteReadRoundTrip) {
  const std::vector<std::vector<std::string>> rows{
      {"id", "text"}, {"1", "plain"}, {"2", "has, comma"}, {"3", "has \"quote\""}, {"4", "line\nbreak"}, {"5", ""}};
  std::stringstream buf;
  for (const auto& r : rows) csv::write_row(buf, r);
  const auto t = csv::read(buf);
  EXPECT_EQ(t.header, rows[0]);
  ASSERT_EQ(t.rows.size(), rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(t.rows[i - 1], rows[i]);
}

TEST(LoadCsv, SchemaWithoutIdUsesRowIndex) {
  hbtest::TempDir dir("csv");
  hbtest::write_file(dir / "c.csv", "tweet,class\nhello,0\nworld,1\nagain,2\n");
  corpus::ColumnSchema schema;
  schema.text = "tweet";
  schema.label = "class";
  const auto r = corpus::load_csv(dir / "c.csv", schema);
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].id, "0");
  EXPECT_EQ(r.records[1].id, "1");
  EXPECT_EQ(r.records[2].id, "2");
  EXPECT_EQ(r.records[2].text, "again");
  EXPECT_EQ(r.records[2].label_raw, "2");
}

TEST(LoadCsv, HeaderOnlyGivesNoRecords) {
  hbtest::TempDir dir("csv");
  hbtest::write_file(dir / "c.csv", "text,label\n");
  EXPECT_TRUE(corpus::load_csv(dir / "c.csv", {}).records.empty());
}

TEST(LoadCsv, EmbeddedQuotedCommaPreserved) {
  hbtest::TempDir dir("csv");
  hbtest::write_file(dir / "c.csv", "id,text,label\n7,\"one, two, three\",hate\n");
  corpus::ColumnSchema schema;
  schema.id = "id";
  const auto r = corpus::load_csv(dir / "c.csv", schema);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].id, "7");
  EXPECT_EQ(r.records[0].text, "one, two, three");
}

TEST(LoadCsv, MissingFileAndColumnAreConfigErrors) {
  hbtest::TempDir dir("csv");
  EXPECT_THROW(corpus::load_csv(dir / "nope.csv", {}), ConfigError);
  hbtest::write_file(dir / "c.csv", "body,label\nx,hate\n");
  EXPECT_THROW(corpus::load_csv(dir / "c.csv", {}), ConfigError);
}

TEST(LoadCsv, MalformedRowReported) {
  hbtest::TempDir dir("csv");
  hbtest::write_file(dir / "c.csv", "text,label\na,hate\nb,hate,extra\nc,nonhate\n");
  const auto r = corpus::load_csv(dir / "c.csv", {});
  EXPECT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].record, 2u);
}

TEST(Binarize, ThreeWayMapping) {
  const std::vector<corpus::RawRecord> recs{{"1", "a", "hate"}, {"2", "b", "offensive"}, {"3", "c", "neither"}};
  const auto docs = corpus::binarize_labels(recs, corpus::three_way_mapping());
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].label, Label::Hate);
  EXPECT_EQ(docs[1].label, Label::NonHate);
  EXPECT_EQ(docs[2].label, Label::NonHate);
  EXPECT_EQ(docs[1].id, "2");
}

TEST(Binarize, AllHateStaysHate) {
  const std::vector<corpus::RawRecord> recs{{"1", "a", "hate"}, {"2", "b", "0"}};
  for (const auto& d : corpus::binarize_labels(recs, corpus::three_way_mapping())) EXPECT_EQ(d.label, Label::Hate);
}

TEST(Binarize, UnmappedLabelNamed) {
  const std::vector<corpus::RawRecord> recs{{"1", "a", "hate"}, {"2", "b", "spam"}};
  try {
    corpus::binarize_labels(recs, corpus::three_way_mapping());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("spam"), std::string::npos);
  }
}

TEST(Binarize, CustomMapping) {
  const auto m = corpus::parse_mapping("yes=hate,no=nonhate");
  const std::vector<corpus::RawRecord> recs{{"1", "a", "no"}, {"2", "b", "yes"}};
  const auto docs = corpus::binarize_labels(recs, m);
  EXPECT_EQ(docs[0].label, Label::NonHate);
  EXPECT_EQ(docs[1].label, Label::Hate);
  EXPECT_THROW(corpus::parse_mapping("yes"), ConfigError);
}

TEST(Merge, ConcatenatesWithoutDedupe) {
  const auto a = make_docs(2);
  const auto b = make_docs(3);
  corpus::MergeOptions opt;
  opt.dedupe = false;
  const auto r = corpus::merge_corpora(a, b, opt);
  EXPECT_EQ(r.docs.size(), 5u);
  EXPECT_EQ(r.docs[0].id, "a:d0");
  EXPECT_EQ(r.docs[2].id, "b:d0");
}

TEST(Merge, DedupeKeepsFirstAfterNfc) {
  // "café" precomposed and decomposed are the same text after NFC.
  const std::vector<LabeledDocument> a{{"1", "caf\xC3\xA9", Label::Hate}};
  const std::vector<LabeledDocument> b{{"1", "cafe\xCC\x81", Label::NonHate}, {"2", "other", Label::Hate}};
  const auto r = corpus::merge_corpora(a, b);
  ASSERT_EQ(r.docs.size(), 2u);
  EXPECT_EQ(r.docs[0].id, "a:1");
  EXPECT_EQ(r.duplicates_removed, 1u);
}

TEST(Merge, DistinctTextsUnchangedAndIdempotent) {
  const auto a = make_docs(3);
  corpus::MergeOptions opt;
  opt.prefix_a = "";
  opt.prefix_b = "";
  const auto once = corpus::merge_corpora(a, {}, opt);
  EXPECT_EQ(once.docs, a);
  const auto twice = corpus::merge_corpora(once.docs, {}, opt);
  EXPECT_EQ(twice.docs, once.docs);
  EXPECT_EQ(twice.duplicates_removed, 0u);
}

TEST(Split, SizesFollowFloor) {
  const auto docs = make_docs(10);
  const auto s = corpus::split(docs, 0.7, 1);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 3u);
  EXPECT_EQ(corpus::train_size(0.29, 100), 29u);
  EXPECT_EQ(corpus::train_size(0.5, 5), 2u);
}

TEST(Split, DeterministicAndPartitioning) {
  const auto docs = make_docs(101);
  const auto a = corpus::split(docs, 0.7, 42);
  const auto b = corpus::split(docs, 0.7, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  auto all = ids(a.train);
  for (const auto& d : a.test) all.insert(d.id);
  EXPECT_EQ(all, ids(docs));
  for (const auto& d : a.test) EXPECT_EQ(ids(a.train).count(d.id), 0u);
}

TEST(Split, SeedsGiveDifferentMembership) {
  const auto docs = make_docs(10);
  const auto a = corpus::split(docs, 0.7, 1);
  const auto b = corpus::split(docs, 0.7, 2);
  EXPECT_EQ(a.train.size(), b.train.size());
  EXPECT_NE(ids(a.train), ids(b.train));
}

// Independent re-implementation of the documented algorithm: Fisher-Yates
// from the back with SplitMix64(seed), first floor(ratio*N) to train.
TEST(Split, MatchesDocumentedShuffle) {
  const auto docs = make_docs(25);
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(9);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % i;
    std::uint64_t x = rng.next();
    while (x >= limit) x = rng.next();
    std::swap(order[i - 1], order[x % i]);
  }
  const auto s = corpus::split(docs, 0.6, 9);
  ASSERT_EQ(s.train.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(s.train[i].id, docs[order[i]].id);
  for (std::size_t i = 15; i < 25; ++i) EXPECT_EQ(s.test[i - 15].id, docs[order[i]].id);
}

TEST(Split, StratifiedKeepsClassShares) {
  const auto docs = make_docs(100, 4);  // 25 hate
  const auto s = corpus::split(docs, 0.7, 3, true);
  EXPECT_EQ(s.train.size(), 70u);
  const auto hate = std::count_if(s.train.begin(), s.train.end(), [](const auto& d) { return d.label == Label::Hate; });
  EXPECT_NEAR(static_cast<double>(hate), 17.5, 0.5 + 1e-9);
}

TEST(Split, RejectsBadInput) {
  const auto docs = make_docs(10);
  EXPECT_THROW(corpus::split(docs, 0.0, 1), ConfigError);
  EXPECT_THROW(corpus::split(docs, 1.0, 1), ConfigError);
  EXPECT_THROW(corpus::split(make_docs(1), 0.5, 1), ConfigError);
}

TEST(Split, WriteReadRoundTrip) {
  hbtest::TempDir dir("split");
  std::vector<LabeledDocument> docs = make_docs(12);
  docs[3].text = "comma, \"quote\" and\nnewline";
  const auto s = corpus::split(docs, 0.7, 5);
  corpus::write_split(s, dir.path());
  const auto back = corpus::read_split(dir.path());
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.test, s.test);
  const std::string head = hbtest::read_file(dir / "train.csv").substr(0, 14);
  EXPECT_EQ(head, "id,text,label\n");
}
