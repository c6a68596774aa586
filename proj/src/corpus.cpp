#include "hatebench/corpus.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "hatebench/rng.hpp"
#include "hatebench/unicode.hpp"

namespace hatebench::corpus {

LoadResult load_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  if (!std::filesystem::exists(path)) throw ConfigError("input file not found: " + path.string());
  const csv::Table table = csv::read_file(path);

  auto require = [&](const std::string& name) {
    const std::size_t idx = table.column(name);
    if (idx == csv::Table::npos) {
      throw ConfigError("column '" + name + "' not found in " + path.string());
    }
    return idx;
  };
  const std::size_t text_col = require(schema.text);
  const std::size_t label_col = require(schema.label);
  const std::size_t id_col = schema.id ? require(*schema.id) : csv::Table::npos;

  LoadResult result;
  result.skipped = table.skipped;
  result.records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    RawRecord rec;
    rec.id = id_col == csv::Table::npos ? std::to_string(i) : row[id_col];
    rec.text = row[text_col];
    rec.label_raw = row[label_col];
    result.records.push_back(std::move(rec));
  }
  return result;
}

LabelMapping three_way_mapping() {
  return {
      {"hate", Label::Hate},        {"offensive", Label::NonHate}, {"neither", Label::NonHate},
      {"0", Label::Hate},           {"1", Label::NonHate},         {"2", Label::NonHate},
      {"nonhate", Label::NonHate},
  };
}

LabelMapping parse_mapping(std::string_view spec) {
  LabelMapping mapping;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find(',', start), spec.size());
    const std::string_view item = spec.substr(start, end - start);
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("label mapping entry '" + std::string(item) + "' lacks '='");
      }
      try {
        mapping.emplace(std::string(item.substr(0, eq)), parse_label(item.substr(eq + 1)));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    start = end + 1;
  }
  return mapping;
}

std::vector<LabeledDocument> binarize_labels(std::span<const RawRecord> records,
                                             const LabelMapping& mapping) {
  std::vector<LabeledDocument> docs;
  docs.reserve(records.size());
  for (const auto& rec : records) {
    const auto it = mapping.find(rec.label_raw);
    if (it == mapping.end()) throw Error("unmapped label value '" + rec.label_raw + "'");
    docs.push_back({rec.id, rec.text, it->second});
  }
  return docs;
}

MergeResult merge_corpora(std::span<const LabeledDocument> a, std::span<const LabeledDocument> b,
                          const MergeOptions& options) {
  MergeResult result;
  std::unordered_set<std::string> seen;
  auto append = [&](std::span<const LabeledDocument> docs, const std::string& prefix) {
    for (const auto& doc : docs) {
      if (options.dedupe && !seen.insert(unicode::nfc(doc.text)).second) {
        ++result.duplicates_removed;
        continue;
      }
      LabeledDocument copy = doc;
      if (!prefix.empty()) copy.id = prefix + ":" + doc.id;
      result.docs.push_back(std::move(copy));
    }
  };
  append(a, options.prefix_a);
  append(b, options.prefix_b);
  return result;
}

std::size_t train_size(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

DatasetSplit split(std::span<const LabeledDocument> docs, double ratio, std::uint64_t seed,
                   bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie strictly between 0 and 1, got " + std::to_string(ratio));
  }
  if (docs.size() < 2) throw ConfigError("split needs at least 2 documents");

  DatasetSplit out;
  out.ratio = ratio;
  out.seed = seed;
  SplitMix64 rng(seed);
  const std::size_t n_train = train_size(ratio, docs.size());

  if (!stratified) {
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_train ? out.train : out.test).push_back(docs[order[i]]);
    }
    return out;
  }

  // Stratified: per-class quotas by largest remainder, ties to Hate.
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < docs.size(); ++i) {
    by_class[static_cast<int>(docs[i].label)].push_back(i);
  }
  double exact[2];
  std::size_t quota[2];
  for (int c = 0; c < 2; ++c) {
    exact[c] = static_cast<double>(n_train) * static_cast<double>(by_class[c].size()) /
               static_cast<double>(docs.size());
    quota[c] = static_cast<std::size_t>(std::floor(exact[c]));
  }
  if (quota[0] + quota[1] < n_train) {
    const int bump = (exact[1] - quota[1] >= exact[0] - quota[0]) ? 1 : 0;
    ++quota[bump];
  }
  std::vector<bool> in_train(docs.size(), false);
  for (int c = 1; c >= 0; --c) {
    shuffle(by_class[c], rng);
    for (std::size_t k = 0; k < quota[c] && k < by_class[c].size(); ++k) in_train[by_class[c][k]] = true;
  }
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  for (const std::size_t i : order) (in_train[i] ? out.train : out.test).push_back(docs[i]);
  return out;
}

void write_documents(std::ostream& out, std::span<const LabeledDocument> docs) {
  const std::vector<std::string> header{"id", "text", "label"};
  csv::write_row(out, header);
  for (const auto& doc : docs) {
    const std::vector<std::string> row{doc.id, doc.text, std::string(to_string(doc.label))};
    csv::write_row(out, row);
  }
}

void write_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, docs] : {std::pair{"train.csv", &split.train}, std::pair{"test.csv", &split.test}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    write_documents(out, *docs);
  }
}

DatasetSplit read_split(const std::filesystem::path& dir) {
  const ColumnSchema schema{"id", "text", "label"};
  const LabelMapping mapping{{"hate", Label::Hate}, {"nonhate", Label::NonHate}};
  DatasetSplit out;
  out.train = binarize_labels(load_csv(dir / "train.csv", schema).records, mapping);
  out.test = binarize_labels(load_csv(dir / "test.csv", schema).records, mapping);
  const std::size_t n = out.train.size() + out.test.size();
  out.ratio = n ? static_cast<double>(out.train.size()) / static_cast<double>(n) : 0.0;
  return out;
}

}  // namespace hatebench::corpus
