#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hatebench/common.hpp"
#include "hatebench/csv.hpp"

namespace hatebench::corpus {

/// One data row as it appears in the source file.
struct RawRecord {
  std::string id;
  std::string text;
  std::string label_raw;
};

/// Which CSV columns hold the id, text and label. Without an id column the
/// 0-based data-row index becomes the id.
struct ColumnSchema {
  std::optional<std::string> id;
  std::string text = "text";
  std::string label = "label";
};

struct LoadResult {
  std::vector<RawRecord> records;
  std::vector<csv::Malformed> skipped;
};

/// Throws ConfigError for a missing file or a schema column the header lacks.
LoadResult load_csv(const std::filesystem::path& path, const ColumnSchema& schema);

struct LabeledDocument {
  std::string id;
  std::string text;
  Label label = Label::NonHate;

  friend bool operator==(const LabeledDocument&, const LabeledDocument&) = default;
};

using LabelMapping = std::map<std::string, Label, std::less<>>;

/// Hate stays hate; offensive and neither collapse into non-hate. Covers the
/// textual class names, the numeric codes 0/1/2 of the three-way tweet
/// dataset, and this project's own hate/nonhate spelling.
LabelMapping three_way_mapping();

/// Parses "hate=hate,offensive=nonhate,..." into a mapping.
LabelMapping parse_mapping(std::string_view spec);

/// Order-preserving. Throws Error naming the first unmapped label value.
std::vector<LabeledDocument> binarize_labels(std::span<const RawRecord> records,
                                             const LabelMapping& mapping);

struct MergeOptions {
  bool dedupe = true;
  /// Prepended to ids as "<prefix>:<id>"; an empty prefix keeps ids as they are.
  std::string prefix_a = "a";
  std::string prefix_b = "b";
};

struct MergeResult {
  std::vector<LabeledDocument> docs;
  std::size_t duplicates_removed = 0;
};

/// Concatenates a then b. With dedupe on, documents whose NFC-normalized text
/// is byte-identical to an earlier one are dropped.
MergeResult merge_corpora(std::span<const LabeledDocument> a, std::span<const LabeledDocument> b,
                          const MergeOptions& options = {});

struct DatasetSplit {
  std::vector<LabeledDocument> train;
  std::vector<LabeledDocument> test;
  double ratio = 0.7;
  std::uint64_t seed = 0;
};

/// floor(ratio * N) with a 1e-9 guard against products like 0.29 * 100
/// landing just below an integer.
std::size_t train_size(double ratio, std::size_t n);

/// Shuffles with SplitMix64(seed) Fisher-Yates and puts the first
/// train_size(ratio, N) documents into train. With `stratified`, each class
/// is shuffled separately and contributes its largest-remainder share.
/// Throws ConfigError when ratio is outside (0, 1) or fewer than 2 docs.
DatasetSplit split(std::span<const LabeledDocument> docs, double ratio, std::uint64_t seed,
                   bool stratified = false);

/// train.csv and test.csv with columns id,text,label.
void write_split(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit read_split(const std::filesystem::path& dir);

/// Writes id,text,label rows.
void write_documents(std::ostream& out, std::span<const LabeledDocument> docs);

}  // namespace hatebench::corpus
