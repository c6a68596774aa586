#include "hatebench/feature_matrix.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "hatebench/csv.hpp"

namespace hatebench {

FeatureMatrix::FeatureMatrix(std::vector<std::string> row_ids, std::vector<std::string> column_labels)
    : row_ids_(std::move(row_ids)),
      column_labels_(std::move(column_labels)),
      values_(row_ids_.size() * column_labels_.size(), 0.0) {}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < rows.size(); ++i) ids.push_back(std::to_string(i));
  for (std::size_t j = 0; j < width; ++j) labels.push_back("x" + std::to_string(j));
  FeatureMatrix m(std::move(ids), std::move(labels));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw Error("from_rows: ragged input at row " + std::to_string(i));
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (const std::size_t i : indices) ids.push_back(row_ids_.at(i));
  FeatureMatrix out(std::move(ids), column_labels_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

FeatureMatrix concat_features(std::span<const FeatureMatrix> parts) {
  if (parts.empty()) throw Error("concat_features: no parts");
  const FeatureMatrix& first = parts.front();
  std::vector<std::string> labels;
  std::unordered_set<std::string> seen;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const FeatureMatrix& part = parts[p];
    if (part.rows() != first.rows()) {
      throw Error("concat_features: part " + std::to_string(p) + " has " +
                  std::to_string(part.rows()) + " rows, expected " + std::to_string(first.rows()));
    }
    if (part.row_ids() != first.row_ids()) {
      throw Error("concat_features: part " + std::to_string(p) + " lists documents in a different order");
    }
    for (const auto& label : part.column_labels()) {
      if (!seen.insert(label).second) throw Error("concat_features: duplicate column label '" + label + "'");
      labels.push_back(label);
    }
  }
  FeatureMatrix out(first.row_ids(), std::move(labels));
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r).begin();
    for (const auto& part : parts) {
      const auto src = part.row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

FeatureMatrix slice_columns(const FeatureMatrix& m, std::string_view prefix) {
  std::vector<std::size_t> cols;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (m.column_labels()[j].starts_with(prefix)) {
      cols.push_back(j);
      labels.push_back(m.column_labels()[j]);
    }
  }
  FeatureMatrix out(m.row_ids(), std::move(labels));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) out.at(r, k) = m.at(r, cols[k]);
  }
  return out;
}

void require_finite(const FeatureMatrix& m, std::string_view what) {
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    if (std::isnan(m.values()[i])) {
      throw Error(std::string(what) + ": NaN at row " + std::to_string(i / std::max<std::size_t>(1, m.cols())) +
                  ", column " + std::to_string(i % std::max<std::size_t>(1, m.cols())));
    }
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("not a number: '" + std::string(text) + "'");
  }
  return value;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m,
                       std::optional<std::span<const Label>> labels) {
  if (labels && labels->size() != m.rows()) throw Error("write_feature_csv: label count mismatch");
  std::vector<std::string> fields{"id"};
  if (labels) fields.emplace_back("label");
  fields.insert(fields.end(), m.column_labels().begin(), m.column_labels().end());
  csv::write_row(out, fields);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    fields.clear();
    fields.push_back(m.row_ids()[r]);
    if (labels) fields.emplace_back(to_string((*labels)[r]));
    for (const double v : m.row(r)) fields.push_back(format_double(v));
    csv::write_row(out, fields);
  }
}

LabeledFeatures read_feature_csv(std::istream& in) {
  const csv::Table table = csv::read(in);
  if (!table.skipped.empty()) {
    throw Error("feature csv: malformed record " + std::to_string(table.skipped.front().record) + ": " +
                table.skipped.front().reason);
  }
  if (table.header.empty() || table.header[0] != "id") throw Error("feature csv: first column must be 'id'");
  const bool has_labels = table.header.size() > 1 && table.header[1] == "label";
  const std::size_t first_value = has_labels ? 2 : 1;

  std::vector<std::string> ids;
  for (const auto& row : table.rows) ids.push_back(row[0]);
  LabeledFeatures result;
  result.matrix = FeatureMatrix(std::move(ids),
                                std::vector<std::string>(table.header.begin() + static_cast<long>(first_value),
                                                         table.header.end()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (has_labels) result.labels.push_back(parse_label(row[1]));
    for (std::size_t j = first_value; j < row.size(); ++j) {
      result.matrix.at(r, j - first_value) = parse_double(row[j]);
    }
  }
  return result;
}

}  // namespace hatebench
