#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hatebench/corpus.hpp"
#include "hatebench/evalharness.hpp"

namespace hatebench::config {

/// Everything a CLI invocation needs. Filled from defaults, then command-line
/// flags, then a config file (the file wins).
struct RunConfig {
  std::vector<std::filesystem::path> corpora;  // one, or two to merge
  corpus::ColumnSchema schema;
  std::string label_map;  // empty: three_way_mapping()
  bool dedupe = true;
  std::filesystem::path split_dir;  // train.csv + test.csv instead of a corpus
  std::string recipe;
  std::string classifier = "lr";
  std::string neural;  // e.g. "bigru(word2vec:100)"; replaces recipe + classifier
  std::string preset = "paper_matrix";
  std::size_t jobs = 1;
  evalharness::RunOptions options;
};

/// Applies a JSON object on top of `config`. Recognized keys:
///   corpus (string or array of 1-2 strings), id_column, text_column,
///   label_column, label_map, dedupe, split_dir, recipe, classifier, neural,
///   preset, jobs, seed, split_ratio, stratified, keep_hashtag_text,
///   sentiment_on_clean, vocab_ranking ("total" | "doc"),
///   doc2vec_transductive, metrics ("binary" | "macro"), resource_dir,
///   and the objects lr, dt, rf, nb, doc2vec, word2vec, rnn holding the
///   matching hyperparameters.
/// Relative paths resolve against `base_dir`. Unknown keys and wrong types
/// throw ConfigError.
void apply_json(std::string_view json_text, RunConfig& config, const std::filesystem::path& base_dir = {});

/// Reads the file and calls apply_json with its directory as base.
void apply_file(const std::filesystem::path& path, RunConfig& config);

/// Flat key/value view of the effective settings, for provenance records.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& config);

/// Loads, binarizes and (for two corpora) merges the configured corpora.
struct LoadedCorpus {
  std::vector<corpus::LabeledDocument> docs;
  std::size_t malformed_rows = 0;
  std::size_t duplicates_removed = 0;
};
LoadedCorpus load_corpus(const RunConfig& config);

}  // namespace hatebench::config
