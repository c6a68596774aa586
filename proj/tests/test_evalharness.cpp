#include <gtest/gtest.h>

#include <sstream>

#include "hatebench/config.hpp"
#include "hatebench/evalharness.hpp"
#include "hatebench/rng.hpp"
#include "test_util.hpp"

using namespace hatebench;
using namespace hatebench::evalharness;

namespace {

constexpr Label H = Label::Hate;
constexpr Label N = Label::NonHate;

const std::vector<LabeledDocument>& toy(std::size_t n) {
  static const std::vector<LabeledDocument> all = [] {
    config::RunConfig cfg;
    cfg.corpora = {std::filesystem::path(HB_DATA_DIR) / "toy_corpus.csv"};
    return config::load_corpus(cfg).docs;
  }();
  static std::map<std::size_t, std::vector<LabeledDocument>> cache;
  auto& slot = cache[n];
  if (slot.empty()) slot.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(n, all.size())));
  return slot;
}

// Cheap settings so the harness tests stay fast.
RunOptions quick() {
  RunOptions o;
  o.doc2vec.epochs = 2;
  o.doc2vec.infer_steps = 3;
  o.classifier.rf.n_trees = 5;
  o.classifier.lr.epochs = 50;
  o.word2vec.epochs = 1;
  o.rnn.epochs = 1;
  o.rnn.hidden = 4;
  return o;
}

ExperimentSpec spec(const std::string& recipe, classifiers::ClassifierKind kind, const RunOptions& o) {
  ExperimentSpec s;
  s.recipe = parse_recipe(recipe);
  s.classifier = kind;
  s.options = o;
  return s;
}

void expect_same(const CellResult& a, const CellResult& b) {
  ASSERT_EQ(a.ok(), b.ok()) << a.error << b.error;
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(a.spec_digest, b.spec_digest);
  if (a.ok()) EXPECT_EQ(*a.metrics, *b.metrics);
}

LabeledDocument doc(const std::string& id, const std::string& text, Label l = N) { return {id, text, l}; }

}  // namespace

// ------------------------------------------------------------------ metrics

TEST(Metrics, WorkedExample) {
  const std::vector<Label> pred{H, H, N, N, H};
  const std::vector<Label> truth{H, N, H, N, H};
  const auto c = confusion(pred, truth);
  EXPECT_EQ(c, (ConfusionCounts{2, 1, 1, 1}));
  const auto m = metrics(c);
  EXPECT_EQ(m.accuracy, 3.0 / 5.0);
  EXPECT_EQ(m.precision, 2.0 / 3.0);
  EXPECT_EQ(m.recall, 2.0 / 3.0);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-15);
}

TEST(Metrics, ZeroDenominatorsGiveZero) {
  const auto m = metrics(ConfusionCounts{0, 0, 5, 3});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(m.accuracy, 5.0 / 8.0);
  EXPECT_THROW(metrics(ConfusionCounts{}), Error);
  EXPECT_THROW(confusion(std::vector<Label>{H}, std::vector<Label>{H, N}), Error);
}

TEST(Metrics, PerfectIsExactlyOne) {
  const auto m = metrics(ConfusionCounts{7, 0, 4, 0});
  EXPECT_EQ(m, (MetricsReport{1.0, 1.0, 1.0, 1.0}));
}

TEST(Metrics, IdentitiesOnRandomCounts) {
  SplitMix64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    if (c.total() == 0) c.tn = 1;
    const auto m = metrics(c);
    const double tp = static_cast<double>(c.tp);
    EXPECT_EQ(m.accuracy, static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()));
    const double f1 = c.tp == 0 ? 0.0 : 2 * tp / (2 * tp + static_cast<double>(c.fp + c.fn));
    EXPECT_NEAR(m.f1, f1, 1e-12);
    if (m.precision + m.recall > 0) {
      EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
    }
  }
}

TEST(Metrics, MacroAveragesBothClasses) {
  const ConfusionCounts c{2, 1, 1, 1};
  const auto mac = macro_metrics(c);
  const auto pos = metrics(c);
  const auto neg = metrics(ConfusionCounts{1, 1, 2, 1});
  EXPECT_EQ(mac.accuracy, pos.accuracy);
  EXPECT_NEAR(mac.precision, (pos.precision + neg.precision) / 2, 1e-15);
  EXPECT_NEAR(mac.f1, (pos.f1 + neg.f1) / 2, 1e-15);
  EXPECT_EQ(parse_averaging("macro"), Averaging::Macro);
  EXPECT_THROW(parse_averaging("micro"), ConfigError);
}

TEST(Metrics, FormatHalfUp) {
  EXPECT_EQ(format_metric(0.83334999), "0.8333");
  EXPECT_EQ(format_metric(0.83336), "0.8334");
  EXPECT_EQ(format_metric(1.0), "1.0000");
  EXPECT_EQ(format_metric(0.0), "0.0000");
  EXPECT_EQ(format_metric(0.5), "0.5000");
}

// ------------------------------------------------------------------ recipes

TEST(Recipes, ParseAndCanonicalText) {
  const auto r = parse_recipe("tfidf + doc2vec(dim=50)+sentiment");
  ASSERT_EQ(r.parts.size(), 3u);
  EXPECT_EQ(r.text(), "tfidf(max=1000,n=1..6)+doc2vec(dim=50)+sentiment");
  EXPECT_EQ(r.display(), "TF-IDF+Doc2Vec+Sentiment");
  EXPECT_EQ(parse_recipe(r.text()), r);
  EXPECT_EQ(parse_recipe("bow(max=10,n=2..3)").parts[0].n_min, 2);
  EXPECT_EQ(parse_recipe("sent2vec(fake:64)").parts[0].resource, "fake:64");
}

TEST(Recipes, Errors) {
  for (const std::string bad : {"", "glove", "tfidf(max=0)", "bow(n=3..2)", "tfidf+", "doc2vec(size=5)",
                                "tfidf(max=10", "sentiment+sentiment", "bow+tfidf"}) {
    EXPECT_THROW(parse_recipe(bad), ConfigError) << bad;
  }
  try {
    parse_recipe("tfidf+glove");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("glove"), std::string::npos);
  }
}

TEST(Recipes, NeuralSpecs) {
  const auto a = parse_neural("bilstm(glove)");
  EXPECT_EQ(a.text(), "bilstm(glove:fake:50)");
  EXPECT_EQ(a.row_label(), "Bi-LSTM");
  EXPECT_EQ(a.display(), "GloVe");
  const auto b = parse_neural("bigru(word2vec:100)");
  EXPECT_EQ(b.cell, neural::CellKind::Gru);
  EXPECT_EQ(b.dim, 100u);
  EXPECT_EQ(b.display(), "Word2vec");
  EXPECT_THROW(parse_neural("birnn(glove)"), ConfigError);
  EXPECT_THROW(parse_neural("bigru(fasttext)"), ConfigError);
}

TEST(Specs, DigestTracksEverythingThatMatters) {
  const RunOptions o = quick();
  const auto a = spec("tfidf+sentiment", classifiers::ClassifierKind::LR, o);
  EXPECT_EQ(a.digest(), spec("tfidf+sentiment", classifiers::ClassifierKind::LR, o).digest());
  EXPECT_EQ(a.digest().size(), 16u);
  EXPECT_NE(a.digest(), spec("tfidf+sentiment", classifiers::ClassifierKind::DT, o).digest());
  RunOptions other = o;
  other.seed = 2;
  EXPECT_NE(a.digest(), spec("tfidf+sentiment", classifiers::ClassifierKind::LR, other).digest());
}

// ------------------------------------------------------------------ presets

TEST(Presets, BundledMatrixExpands) {
  const auto p = load_preset("paper_matrix");
  EXPECT_EQ(p.name, "paper_matrix");
  ASSERT_EQ(p.tables.size(), 7u);
  const auto specs = p.expand(RunOptions{});
  ASSERT_EQ(specs.size(), 28u);
  EXPECT_EQ(specs[0].row_label(), "LR");
  EXPECT_EQ(specs[0].features_label(), "BoW+Sentiment");
  EXPECT_EQ(specs[3].row_label(), "NB");
  EXPECT_EQ(specs[24].row_label(), "Bi-LSTM");
  EXPECT_EQ(specs[24].features_label(), "GloVe");
  EXPECT_EQ(specs[27].row_label(), "Bi-GRU");
  EXPECT_EQ(specs[27].features_label(), "Word2vec");
}

TEST(Presets, GrammarErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      (void)parse_preset(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(line_of("name = x\n[t]\nfeatures = tfidf\nclassifiers = SVM\n").find("line 4"), std::string::npos);
  EXPECT_NE(line_of("name = x\n[t]\nwhat = 1\n").find("line 3"), std::string::npos);
  EXPECT_NE(line_of("features = tfidf\n[t]\nclassifiers = LR\n").find("line 1"), std::string::npos);
  EXPECT_THROW(load_preset("no_such_preset"), ConfigError);
}

// ---------------------------------------------------------------- execution

TEST(Harness, WidthsOfFeatureRecipes) {
  const auto& docs = toy(400);
  const RunOptions o = quick();
  EXPECT_EQ(run_experiment(spec("tfidf(max=1000,n=1..6)+sentiment", classifiers::ClassifierKind::NB, o), docs).width,
            1001u);
  EXPECT_EQ(run_experiment(spec("sent2vec(fake:1024)+sentiment", classifiers::ClassifierKind::NB, o), docs).width,
            1025u);
  EXPECT_EQ(run_experiment(spec("bow(max=1000,n=1..6)+doc2vec(dim=500)+sentiment", classifiers::ClassifierKind::NB, o),
                           docs)
                .width,
            1501u);
}

TEST(Harness, SplitSizesAndNoLeakage) {
  const auto& docs = toy(300);
  const auto r = run_experiment(spec("tfidf+sentiment", classifiers::ClassifierKind::LR, quick()), docs);
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.train_rows, 210u);
  EXPECT_EQ(r.test_rows, 90u);
  EXPECT_EQ(r.counts.total(), 90u);
  EXPECT_EQ(r.test_accesses, 0u);
}

TEST(Harness, TransductiveDoc2VecIsCountedNotFatal) {
  const auto& docs = toy(200);
  RunOptions o = quick();
  o.doc2vec_transductive = true;
  const auto r = run_experiment(spec("doc2vec(dim=20)", classifiers::ClassifierKind::LR, o), docs);
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.test_accesses, 60u);
}

TEST(Harness, MonitorCountsTestIds) {
  const std::vector<LabeledDocument> test{doc("t1", "x"), doc("t2", "y")};
  HygieneMonitor m(test);
  const std::vector<std::string> ids{"a", "t1", "b", "t2"};
  EXPECT_EQ(m.record_fit("stage", ids), 2u);
  EXPECT_EQ(m.record_fit("stage", std::vector<std::string>{"a"}), 0u);
  EXPECT_EQ(m.test_accesses(), 2u);
  EXPECT_EQ(m.stages().at("stage"), 2u);
}

TEST(Harness, MatrixCellEqualsSingleExperiment) {
  const auto& docs = toy(300);
  const auto s = spec("bow(max=200,n=1..2)+sentiment", classifiers::ClassifierKind::DT, quick());
  const std::vector<ExperimentSpec> one{s};
  const auto matrix = run_matrix(one, docs);
  ASSERT_EQ(matrix.size(), 1u);
  expect_same(matrix[0], run_experiment(s, docs));
}

TEST(Harness, JobsDoNotChangeResults) {
  const auto& docs = toy(300);
  const RunOptions o = quick();
  std::vector<ExperimentSpec> specs;
  for (const auto kind : {classifiers::ClassifierKind::LR, classifiers::ClassifierKind::RF,
                          classifiers::ClassifierKind::NB}) {
    specs.push_back(spec("tfidf(max=300,n=1..2)+sentiment", kind, o));
    specs.push_back(spec("doc2vec(dim=10)", kind, o));
  }
  ExperimentSpec rnn;
  rnn.neural = parse_neural("bigru(word2vec:8)");
  rnn.options = o;
  specs.push_back(rnn);
  const auto a = run_matrix(specs, docs, 1);
  const auto b = run_matrix(specs, docs, 3);
  ASSERT_EQ(a.size(), specs.size());
  for (std::size_t i = 0; i < a.size(); ++i) expect_same(a[i], b[i]);
}

TEST(Harness, FailingCellDoesNotStopOthers) {
  const auto& docs = toy(200);
  std::vector<ExperimentSpec> specs{spec("sent2vec(/nonexistent/file.txt)", classifiers::ClassifierKind::LR, quick()),
                                    spec("tfidf+sentiment", classifiers::ClassifierKind::NB, quick())};
  const auto r = run_matrix(specs, docs);
  EXPECT_FALSE(r[0].ok());
  EXPECT_FALSE(r[0].error.empty());
  EXPECT_TRUE(r[1].ok());
  const auto report = make_report(r);
  EXPECT_EQ(report.rows[0].values[0], "ERROR");
}

// ------------------------------------------------------------------ reports

TEST(Reports, CsvRoundTrip) {
  ReportTable t;
  t.rows.push_back({"LR", "TF-IDF+Sentiment", {"0.9000", "0.8000", "0.7000", "0.7467"}});
  t.rows.push_back({"Bi-GRU", "Word2vec", {"ERROR", "ERROR", "ERROR", "ERROR"}});
  std::stringstream buf;
  emit_report(buf, t, ReportFormat::Csv);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "Classifier,Features,Accuracy,Precision,Recall,F1");
  EXPECT_EQ(parse_report_csv(buf).rows, t.rows);
}

TEST(Reports, OneRowGivesTwoLines) {
  ReportTable t;
  t.rows.push_back({"NB", "BoW", {"1.0000", "1.0000", "1.0000", "1.0000"}});
  std::stringstream buf;
  emit_report(buf, t, ReportFormat::Csv);
  const std::string text = buf.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_THROW(emit_report(buf, ReportTable{}, ReportFormat::Csv), Error);
}

TEST(Reports, MarkdownSections) {
  CellResult a;
  a.table = "t1";
  a.title = "Classical";
  a.classifier = "LR";
  a.features = "TF-IDF";
  a.width = 1001;
  a.metrics = MetricsReport{0.9, 0.8, 0.7, 0.75};
  CellResult b = a;
  b.table = "t2";
  b.title = "Recurrent";
  b.classifier = "Bi-LSTM";
  b.features = "GloVe";
  const std::vector<CellResult> cells{a, b};
  std::stringstream md;
  emit_report(md, make_report(cells), ReportFormat::Markdown);
  const std::string s = md.str();
  EXPECT_NE(s.find("## Classical"), std::string::npos);
  EXPECT_NE(s.find("Feature width: 1001"), std::string::npos);
  EXPECT_NE(s.find("| LR | 0.9000 | 0.8000 | 0.7000 | 0.7500 |"), std::string::npos);
  EXPECT_NE(s.find("Embeddings Used"), std::string::npos);
  EXPECT_NE(s.find("| Bi-LSTM | GloVe |"), std::string::npos);
}

// -------------------------------------------------------------------- audit

TEST(Audit, ExactAndNearDuplicates) {
  const std::vector<LabeledDocument> train{doc("a", "The cats are running!"), doc("b", "caf\xC3\xA9 time"),
                                           doc("c", "unique words here", H)};
  const std::vector<LabeledDocument> test{doc("x", "caf" "e\xCC\x81 time"), doc("y", "@bob the cat running"),
                                          doc("z", "totally different")};
  const auto r = leakage_audit(train, test);
  EXPECT_EQ(r.test_rows, 3u);
  EXPECT_EQ(r.exact_duplicates, 1u);
  EXPECT_EQ(r.exact_ids, (std::vector<std::string>{"x"}));
  EXPECT_EQ(r.near_duplicates, 1u);
  EXPECT_EQ(r.near_ids, (std::vector<std::string>{"y"}));
  EXPECT_EQ(r.train_balance[1], 1u);
  EXPECT_NE(audit_json(r).find("\"exact_duplicates\": 1"), std::string::npos);
}

TEST(Audit, EmptyCleanedTextIsNotANearDuplicate) {
  const std::vector<LabeledDocument> train{doc("a", "@x 123")};
  const std::vector<LabeledDocument> test{doc("b", "@y 456")};
  const auto r = leakage_audit(train, test);
  EXPECT_EQ(r.exact_duplicates, 0u);
  EXPECT_EQ(r.near_duplicates, 0u);
}

TEST(Audit, PlantedDuplicatesAreFoundExactly) {
  const auto& docs = toy(500);
  const auto s = corpus::split(docs, 0.7, 3);
  const auto before = leakage_audit(s.train, s.test);
  std::vector<LabeledDocument> test = s.test;
  const std::size_t planted = plant_duplicates(s.train, test, 0.3, 5);
  EXPECT_EQ(planted, 45u);
  for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(test[i].id, s.test[i].id);
  const auto after = leakage_audit(s.train, test);
  EXPECT_EQ(after.exact_duplicates, before.exact_duplicates + planted);
}

// ----------------------------------------------------------------- manifest

TEST(Manifest, Sha256AndListing) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  hbtest::TempDir dir("manifest");
  hbtest::write_file(dir / "out.txt", "abc");
  const std::vector<std::filesystem::path> inputs{dir / "out.txt"};
  const std::vector<std::string> outputs{"out.txt"};
  write_manifest(dir.path(), inputs, outputs);
  const std::string m = hbtest::read_file(dir / "manifest.json");
  EXPECT_NE(m.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"), std::string::npos);
  EXPECT_THROW(sha256_file(dir / "missing"), ConfigError);
}
