#include "hatebench/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hatebench::config {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::size_t get_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(key, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::uint64_t get_u64(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  bad(key, "expected a nonnegative integer");
}

double get_double(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

std::filesystem::path get_path(const json& v, const std::string& key, const std::filesystem::path& base) {
  const std::filesystem::path p(get_string(v, key));
  return p.is_absolute() || base.empty() ? p : base / p;
}

template <class F>
void each(const json& obj, const std::string& section, F&& f) {
  if (!obj.is_object()) bad(section, "expected an object");
  for (const auto& [k, v] : obj.items()) f(k, v, section + "." + k);
}

void apply_lr(const json& obj, classifiers::LRParams& p) {
  each(obj, "lr", [&](const std::string& k, const json& v, const std::string& key) {
    if (k == "learning_rate") p.learning_rate = get_double(v, key);
    else if (k == "epochs") p.epochs = get_size(v, key);
    else if (k == "l2") p.l2 = get_double(v, key);
    else bad(key, "unknown key");
  });
}

void apply_dt(const json& obj, classifiers::DTParams& p, const std::string& section) {
  each(obj, section, [&](const std::string& k, const json& v, const std::string& key) {
    if (k == "max_depth") {
      p.max_depth = v.is_null() ? classifiers::kUnlimitedDepth : get_size(v, key);
    } else if (k == "min_samples_split") {
      p.min_samples_split = get_size(v, key);
    } else if (k == "min_impurity_decrease") {
      p.min_impurity_decrease = get_double(v, key);
    } else {
      bad(key, "unknown key");
    }
  });
}

void apply_rf(const json& obj, classifiers::RFParams& p) {
  each(obj, "rf", [&](const std::string& k, const json& v, const std::string& key) {
    if (k == "n_trees") {
      p.n_trees = get_size(v, key);
    } else if (k == "max_features") {
      const std::string s = get_string(v, key);
      if (s == "sqrt") p.max_features = classifiers::MaxFeatures::Sqrt;
      else if (s == "all") p.max_features = classifiers::MaxFeatures::All;
      else bad(key, "expected \"sqrt\" or \"all\"");
    } else if (k == "bootstrap") {
      p.bootstrap = get_bool(v, key);
    } else if (k == "tree") {
      apply_dt(v, p.tree, key);
    } else {
      bad(key, "unknown key");
    }
  });
}

void apply_nb(const json& obj, classifiers::NBVariant& variant) {
  each(obj, "nb", [&](const std::string& k, const json& v, const std::string& key) {
    if (k != "variant") bad(key, "unknown key");
    const std::string s = get_string(v, key);
    if (s == "auto") variant = classifiers::NBVariant::Auto;
    else if (s == "gaussian") variant = classifiers::NBVariant::Gaussian;
    else if (s == "multinomial") variant = classifiers::NBVariant::Multinomial;
    else bad(key, "expected auto, gaussian or multinomial");
  });
}

template <class P>
bool apply_sgns_key(const std::string& k, const json& v, const std::string& key, P& p) {
  if (k == "window") p.window = get_size(v, key);
  else if (k == "negatives") p.negatives = get_size(v, key);
  else if (k == "epochs") p.epochs = get_size(v, key);
  else if (k == "lr_start") p.lr_start = get_double(v, key);
  else if (k == "lr_end") p.lr_end = get_double(v, key);
  else if (k == "min_count") p.min_count = get_size(v, key);
  else return false;
  return true;
}

void apply_rnn(const json& obj, neural::RNNHyper& p) {
  each(obj, "rnn", [&](const std::string& k, const json& v, const std::string& key) {
    if (k == "hidden") p.hidden = get_size(v, key);
    else if (k == "max_len") p.max_len = get_size(v, key);
    else if (k == "batch_size") p.batch_size = get_size(v, key);
    else if (k == "lr") p.lr = get_double(v, key);
    else if (k == "momentum") p.momentum = get_double(v, key);
    else if (k == "epochs") p.epochs = get_size(v, key);
    else if (k == "clip_norm") p.clip_norm = get_double(v, key);
    else bad(key, "unknown key");
  });
}

}  // namespace

void apply_json(std::string_view json_text, RunConfig& config, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  auto& o = config.options;
  for (const auto& [k, v] : root.items()) {
    if (k == "corpus") {
      config.corpora.clear();
      if (v.is_string()) {
        config.corpora.push_back(get_path(v, k, base_dir));
      } else if (v.is_array() && !v.empty() && v.size() <= 2) {
        for (const auto& item : v) config.corpora.push_back(get_path(item, k, base_dir));
      } else {
        bad(k, "expected a path or an array of one or two paths");
      }
    } else if (k == "id_column") {
      config.schema.id = get_string(v, k);
    } else if (k == "text_column") {
      config.schema.text = get_string(v, k);
    } else if (k == "label_column") {
      config.schema.label = get_string(v, k);
    } else if (k == "label_map") {
      config.label_map = get_string(v, k);
    } else if (k == "dedupe") {
      config.dedupe = get_bool(v, k);
    } else if (k == "split_dir") {
      config.split_dir = get_path(v, k, base_dir);
    } else if (k == "recipe") {
      config.recipe = get_string(v, k);
    } else if (k == "classifier") {
      config.classifier = get_string(v, k);
    } else if (k == "neural") {
      config.neural = get_string(v, k);
    } else if (k == "preset") {
      config.preset = get_string(v, k);
    } else if (k == "jobs") {
      config.jobs = get_size(v, k);
      if (config.jobs == 0) bad(k, "must be >= 1");
    } else if (k == "seed") {
      o.seed = get_u64(v, k);
    } else if (k == "split_ratio") {
      o.split_ratio = get_double(v, k);
    } else if (k == "stratified") {
      o.stratified = get_bool(v, k);
    } else if (k == "keep_hashtag_text") {
      o.strip.keep_hashtag_text = get_bool(v, k);
    } else if (k == "sentiment_on_clean") {
      o.sentiment_on_clean = get_bool(v, k);
    } else if (k == "vocab_ranking") {
      const std::string s = get_string(v, k);
      if (s == "total") o.ranking = features::VocabRanking::TotalFrequency;
      else if (s == "doc") o.ranking = features::VocabRanking::DocumentFrequency;
      else bad(k, "expected \"total\" or \"doc\"");
    } else if (k == "doc2vec_transductive") {
      o.doc2vec_transductive = get_bool(v, k);
    } else if (k == "metrics") {
      o.averaging = evalharness::parse_averaging(get_string(v, k));
    } else if (k == "resource_dir") {
      o.resource_dir = get_path(v, k, base_dir);
    } else if (k == "lr") {
      apply_lr(v, o.classifier.lr);
    } else if (k == "dt") {
      apply_dt(v, o.classifier.dt, "dt");
    } else if (k == "rf") {
      apply_rf(v, o.classifier.rf);
    } else if (k == "nb") {
      apply_nb(v, o.classifier.nb);
    } else if (k == "doc2vec") {
      each(v, "doc2vec", [&](const std::string& key2, const json& v2, const std::string& full) {
        if (key2 == "infer_steps") o.doc2vec.infer_steps = get_size(v2, full);
        else if (!apply_sgns_key(key2, v2, full, o.doc2vec)) bad(full, "unknown key");
      });
    } else if (k == "word2vec") {
      each(v, "word2vec", [&](const std::string& key2, const json& v2, const std::string& full) {
        if (!apply_sgns_key(key2, v2, full, o.word2vec)) bad(full, "unknown key");
      });
    } else if (k == "rnn") {
      apply_rnn(v, o.rnn);
    } else {
      bad(k, "unknown key");
    }
  }
}

void apply_file(const std::filesystem::path& path, RunConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_json(ss.str(), config, path.parent_path());
}

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& config) {
  const auto& o = config.options;
  const auto& c = o.classifier;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto d = [](double v) { return format_double(v); };
  auto n = [](std::size_t v) { return std::to_string(v); };
  std::string corpora;
  for (const auto& p : config.corpora) corpora += (corpora.empty() ? "" : ";") + p.generic_string();
  return {
      {"corpus", corpora},
      {"split_dir", config.split_dir.generic_string()},
      {"dedupe", b(config.dedupe)},
      {"seed", std::to_string(o.seed)},
      {"split_ratio", d(o.split_ratio)},
      {"stratified", b(o.stratified)},
      {"keep_hashtag_text", b(o.strip.keep_hashtag_text)},
      {"sentiment_on_clean", b(o.sentiment_on_clean)},
      {"vocab_ranking", o.ranking == features::VocabRanking::TotalFrequency ? "total" : "doc"},
      {"doc2vec_transductive", b(o.doc2vec_transductive)},
      {"metrics", std::string(evalharness::to_string(o.averaging))},
      {"lr", d(c.lr.learning_rate) + "/" + n(c.lr.epochs) + "/" + d(c.lr.l2)},
      {"dt.max_depth", c.dt.max_depth == classifiers::kUnlimitedDepth ? "unlimited" : n(c.dt.max_depth)},
      {"rf.n_trees", n(c.rf.n_trees)},
      {"doc2vec.epochs", n(o.doc2vec.epochs)},
      {"word2vec.epochs", n(o.word2vec.epochs)},
      {"rnn.hidden", n(o.rnn.hidden)},
      {"rnn.epochs", n(o.rnn.epochs)},
  };
}

LoadedCorpus load_corpus(const RunConfig& config) {
  if (config.corpora.empty()) throw ConfigError("no corpus given (use --corpus)");
  if (config.corpora.size() > 2) throw ConfigError("at most two corpora can be merged");
  const corpus::LabelMapping mapping =
      config.label_map.empty() ? corpus::three_way_mapping() : corpus::parse_mapping(config.label_map);
  LoadedCorpus out;
  std::vector<std::vector<corpus::LabeledDocument>> parts;
  for (const auto& path : config.corpora) {
    const corpus::LoadResult loaded = corpus::load_csv(path, config.schema);
    out.malformed_rows += loaded.skipped.size();
    try {
      parts.push_back(corpus::binarize_labels(loaded.records, mapping));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  if (parts.size() == 1) {
    out.docs = std::move(parts.front());
    return out;
  }
  corpus::MergeOptions merge;
  merge.dedupe = config.dedupe;
  corpus::MergeResult merged = corpus::merge_corpora(parts[0], parts[1], merge);
  out.docs = std::move(merged.docs);
  out.duplicates_removed = merged.duplicates_removed;
  return out;
}

}  // namespace hatebench::config
