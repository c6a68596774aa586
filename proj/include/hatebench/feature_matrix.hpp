#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hatebench/common.hpp"

namespace hatebench {

/// Dense row-major matrix with one row per document and one provenance label
/// per column ("ngram:<text>", "sentiment", "doc2vec:<k>", "sent2vec:<k>").
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> row_ids, std::vector<std::string> column_labels);

  /// Unlabeled matrix for tests and classifier-only use; ids are "0".."n-1",
  /// columns "x0".."x(d-1)". All rows must have equal length.
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return column_labels_.size(); }

  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }

  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& column_labels() const { return column_labels_; }
  const std::vector<double>& values() const { return values_; }

  /// Rows picked by index, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> column_labels_;
  std::vector<double> values_;
};

/// Horizontal concatenation. Throws Error if the parts disagree on row count
/// or on row ids (document order), or if a column label repeats.
FeatureMatrix concat_features(std::span<const FeatureMatrix> parts);

/// Columns whose label starts with `prefix`, in order.
FeatureMatrix slice_columns(const FeatureMatrix& m, std::string_view prefix);

/// Throws Error if any value is NaN.
void require_finite(const FeatureMatrix& m, std::string_view what);

/// CSV with header `id[,label],<column labels>`. Values use the shortest
/// representation that reads back to the same double.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m,
                       std::optional<std::span<const Label>> labels = std::nullopt);

struct LabeledFeatures {
  FeatureMatrix matrix;
  std::vector<Label> labels;  // empty when the file has no label column
};

LabeledFeatures read_feature_csv(std::istream& in);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace hatebench
