#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hatebench/classifiers.hpp"
#include "hatebench/corpus.hpp"
#include "hatebench/embeddings.hpp"
#include "hatebench/features.hpp"
#include "hatebench/neural.hpp"
#include "hatebench/textprep.hpp"

namespace hatebench::evalharness {

using corpus::LabeledDocument;
using textprep::TokenSequence;

// ------------------------------------------------------------------ metrics

/// Hate is the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws Error on a length mismatch or empty input.
ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth);

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Binary metrics for Hate. A ratio with a zero denominator is 0, and f1 is 0
/// when precision + recall is 0. Throws Error when the total is 0.
MetricsReport metrics(const ConfusionCounts& c);

/// Precision, recall and F1 averaged over both classes (each computed with
/// that class as positive). Accuracy is unchanged.
MetricsReport macro_metrics(const ConfusionCounts& c);

enum class Averaging { Binary, Macro };
std::string_view to_string(Averaging a);
Averaging parse_averaging(std::string_view text);

/// Four decimals, half-up: floor(x * 10^4 + 0.5) / 10^4.
std::string format_metric(double value);

// ------------------------------------------------------------------ recipes

enum class FeatureSource { Bow, Tfidf, Sentiment, Doc2Vec, Sent2Vec };

struct FeatureSpec {
  FeatureSource source = FeatureSource::Sentiment;
  std::size_t max_features = 1000;  // bow, tfidf
  int n_min = 1;
  int n_max = 6;
  std::size_t dim = 500;            // doc2vec
  std::string resource = "fake:1024";  // sent2vec: "fake:<dim>" or a file path

  /// Canonical text, e.g. "tfidf(max=1000,n=1..6)".
  std::string text() const;
  /// Report label: BoW, TF-IDF, Sentiment, Doc2Vec, Sent2Vec.
  std::string display() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered feature sources whose matrices are concatenated.
struct Recipe {
  std::vector<FeatureSpec> parts;

  std::string text() const;     // "bow(max=1000,n=1..6)+sentiment"
  std::string display() const;  // "BoW+Sentiment"
  friend bool operator==(const Recipe&, const Recipe&) = default;
};

/// Grammar: part ('+' part)*, part = name | name '(' args ')'.
///   bow(max=1000, n=1..6)   tfidf(max=1000, n=1..6)   sentiment
///   doc2vec(dim=500)        sent2vec(fake:1024) | sent2vec(<path>)
/// Omitted arguments take the defaults shown. Throws ConfigError naming the
/// offending token.
Recipe parse_recipe(std::string_view text);

enum class WordVectors { Glove, Word2Vec };

struct NeuralSpec {
  neural::CellKind cell = neural::CellKind::Lstm;
  WordVectors vectors = WordVectors::Glove;
  std::string resource = "fake:50";  // glove: "fake:<dim>" or a file path
  std::size_t dim = 100;             // word2vec

  std::string text() const;     // "bilstm(glove:fake:50)"
  std::string row_label() const;  // "Bi-LSTM" / "Bi-GRU"
  std::string display() const;    // "GloVe" / "Word2vec"
  friend bool operator==(const NeuralSpec&, const NeuralSpec&) = default;
};

/// bilstm|bigru '(' glove[:fake:<dim>|:<path>] | word2vec[:<dim>] ')'.
NeuralSpec parse_neural(std::string_view text);

// ---------------------------------------------------------------- options

/// Everything besides the recipe and the model that shapes a run.
struct RunOptions {
  double split_ratio = 0.7;
  std::uint64_t seed = 1;
  bool stratified = false;
  textprep::StripOptions strip;
  bool sentiment_on_clean = false;
  features::VocabRanking ranking = features::VocabRanking::TotalFrequency;
  embeddings::Doc2VecParams doc2vec;  // dim comes from the recipe
  /// Train Doc2Vec on train + test documents. Leaks test text into the
  /// features; the hygiene monitor reports it instead of aborting.
  bool doc2vec_transductive = false;
  embeddings::Word2VecParams word2vec;  // dim comes from the neural spec
  classifiers::ClassifierConfig classifier;
  neural::RNNHyper rnn;
  Averaging averaging = Averaging::Binary;
  /// Relative resource paths in recipes resolve against this directory.
  std::filesystem::path resource_dir;
};

/// One cell of a result table: a recipe with a classical classifier, or a
/// neural model.
struct ExperimentSpec {
  std::string table = "table";
  std::string title;
  Recipe recipe;
  classifiers::ClassifierKind classifier = classifiers::ClassifierKind::LR;
  std::optional<NeuralSpec> neural;
  RunOptions options;

  std::string row_label() const;
  std::string features_label() const;
  /// Canonical description of everything that determines the result.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string digest() const;
};

// ----------------------------------------------------------------- hygiene

/// Records the documents every fit call sees and counts those that belong to
/// the test partition. Thread-safe.
class HygieneMonitor {
 public:
  explicit HygieneMonitor(std::span<const LabeledDocument> test);
  HygieneMonitor(const HygieneMonitor&) = delete;
  HygieneMonitor& operator=(const HygieneMonitor&) = delete;

  /// Returns the number of test ids among `ids` and adds it to the total.
  std::size_t record_fit(std::string_view stage, std::span<const std::string> ids);
  std::size_t test_accesses() const;
  /// stage -> number of fit calls, for diagnostics.
  std::map<std::string, std::size_t> stages() const;

 private:
  std::unordered_set<std::string> test_ids_;
  mutable std::mutex mutex_;
  std::size_t hits_ = 0;
  std::map<std::string, std::size_t> stages_;
};

// ---------------------------------------------------------------- execution

/// Cleaned views of a split, shared by every cell that uses it.
struct PreparedSplit {
  std::vector<LabeledDocument> train;
  std::vector<LabeledDocument> test;
  std::vector<TokenSequence> train_clean;
  std::vector<TokenSequence> test_clean;
  std::vector<TokenSequence> train_light;  // pattern-stripped and tokenized only
  std::vector<TokenSequence> test_light;
  std::vector<Label> train_labels;
  std::vector<Label> test_labels;
};

PreparedSplit prepare_split(std::vector<LabeledDocument> train, std::vector<LabeledDocument> test,
                            const RunOptions& options);

/// Train and test matrices for one recipe part, fitted on train only.
struct FeatureBlock {
  FeatureMatrix train;
  FeatureMatrix test;
  std::size_t test_accesses = 0;  // hygiene hits while fitting this block
};

/// Fits one part (vocabulary, IDF, Doc2Vec model, ...) and transforms both sides.
FeatureBlock build_feature_block(const FeatureSpec& part, const PreparedSplit& data, const RunOptions& options,
                                 HygieneMonitor& monitor);

struct CellResult {
  std::string table;
  std::string title;
  std::string classifier;  // row label
  std::string features;    // features label
  std::string spec_digest;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::Binary;
  std::size_t width = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t test_accesses = 0;
  std::optional<MetricsReport> metrics;  // empty when the cell failed
  ConfusionCounts counts;
  std::string error;

  bool ok() const { return metrics.has_value(); }
};

/// Split -> clean -> fit features on train -> transform both -> fit the model
/// on train -> evaluate on test. Throws Error if any fit observed a test
/// document (unless Doc2Vec was explicitly made transductive).
CellResult run_experiment(const ExperimentSpec& spec, std::span<const LabeledDocument> docs);

/// Word vectors (fake, file or trained Word2Vec) plus a trained recurrent
/// model, fitted on the train side only. `width` is the embedding dim.
struct NeuralFit {
  neural::RNNModel model;
  std::size_t width = 0;
  std::size_t test_accesses = 0;
};
NeuralFit fit_neural(const NeuralSpec& spec, const PreparedSplit& data, const RunOptions& options,
                     HygieneMonitor& monitor);

/// Same, on an existing split.
CellResult run_on_split(const ExperimentSpec& spec, const PreparedSplit& data);

/// Runs every spec, sharing splits and feature blocks between cells. A cell
/// that throws becomes an error row; the others still run. Results follow
/// `specs` order whatever `jobs` is.
std::vector<CellResult> run_matrix(std::span<const ExperimentSpec> specs, std::span<const LabeledDocument> docs,
                                   std::size_t jobs = 1);

// ------------------------------------------------------------------ presets

/// A named list of tables. Grammar (one statement per line, '#' comments):
///   name = <text>                    (before the first section)
///   [<table id>]
///   title = <text>
///   features = <recipe>              with
///   classifiers = LR, DT, RF, NB
///   models = bilstm(glove), bigru(word2vec:100), ...
struct PresetTable {
  std::string id;
  std::string title;
  std::optional<Recipe> recipe;
  std::vector<classifiers::ClassifierKind> classifiers;
  std::vector<NeuralSpec> models;
};

struct Preset {
  std::string name;
  std::vector<PresetTable> tables;

  /// One spec per (table, classifier) and per (table, model), in file order.
  std::vector<ExperimentSpec> expand(const RunOptions& options) const;
};

/// Throws ConfigError with the line number on a grammar error.
Preset parse_preset(std::string_view text);
/// A bundled preset name or a file path.
Preset load_preset(std::string_view name_or_path);

// ------------------------------------------------------------------ reports

struct ReportRow {
  std::string classifier;
  std::string features;
  std::array<std::string, 4> values;  // formatted metrics or "ERROR"
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Contiguous rows that form one table in the Markdown rendering.
struct ReportSection {
  std::string id;
  std::string title;
  std::size_t first = 0;
  std::size_t count = 0;
  std::size_t width = 0;
  bool neural = false;
};

struct ReportTable {
  std::vector<ReportRow> rows;
  std::vector<ReportSection> sections;
  Averaging averaging = Averaging::Binary;
};

ReportTable make_report(std::span<const CellResult> cells);

enum class ReportFormat { Csv, Markdown };

/// CSV header Classifier,Features,Accuracy,Precision,Recall,F1. Throws Error
/// on an empty table.
void emit_report(std::ostream& out, const ReportTable& table, ReportFormat format);
/// Throws ConfigError if the file cannot be written.
void emit_report(const std::filesystem::path& path, const ReportTable& table, ReportFormat format);

/// Rows of a CSV report (sections are not stored in CSV).
ReportTable parse_report_csv(std::istream& in);

/// JSON sidecar: run settings and one record per cell (digest, widths,
/// confusion counts, hygiene count, error text). No timestamps.
std::string provenance_json(std::span<const CellResult> cells, std::string_view command,
                            std::span<const std::pair<std::string, std::string>> settings);

// -------------------------------------------------------------------- audit

struct AuditReport {
  std::size_t test_rows = 0;
  std::size_t exact_duplicates = 0;  // test text identical to a train text after NFC
  std::size_t near_duplicates = 0;   // otherwise same non-empty cleaned token sequence
  std::vector<std::string> exact_ids;
  std::vector<std::string> near_ids;
  std::array<std::size_t, 2> train_balance{0, 0};  // nonhate, hate
  std::array<std::size_t, 2> test_balance{0, 0};
};

AuditReport leakage_audit(std::span<const LabeledDocument> train, std::span<const LabeledDocument> test,
                          const textprep::Pipeline& pipeline = textprep::Pipeline());

std::string audit_json(const AuditReport& report);

/// Replaces round(fraction * |test|) randomly chosen test documents with
/// copies (text and label) of distinct random train documents, keeping the
/// test ids. Returns the number planted.
std::size_t plant_duplicates(std::span<const LabeledDocument> train, std::vector<LabeledDocument>& test,
                             double fraction, std::uint64_t seed);

// ---------------------------------------------------------------- manifest

/// Lowercase hex SHA-256 of a file's bytes. Throws ConfigError if unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

/// `dir`/`name` listing inputs (as given) and outputs (relative to `dir`)
/// with their SHA-256.
void write_manifest(const std::filesystem::path& dir, std::span<const std::filesystem::path> inputs,
                    std::span<const std::string> outputs, std::string_view name = "manifest.json");

}  // namespace hatebench::evalharness
