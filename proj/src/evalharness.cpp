#include "hatebench/evalharness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hatebench/csv.hpp"
#include "hatebench/resources.hpp"
#include "hatebench/rng.hpp"
#include "hatebench/unicode.hpp"

namespace hatebench::evalharness {

using classifiers::ClassifierKind;

// ------------------------------------------------------------------ metrics

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw Error("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error("confusion: no rows");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == Label::Hate;
    const bool t = truth[i] == Label::Hate;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("metrics: empty confusion counts");
  MetricsReport m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

MetricsReport macro_metrics(const ConfusionCounts& c) {
  const MetricsReport hate = metrics(c);
  const MetricsReport other = metrics(ConfusionCounts{c.tn, c.fn, c.tp, c.fp});
  return {hate.accuracy, (hate.precision + other.precision) / 2.0, (hate.recall + other.recall) / 2.0,
          (hate.f1 + other.f1) / 2.0};
}

std::string_view to_string(Averaging a) { return a == Averaging::Binary ? "binary" : "macro"; }

Averaging parse_averaging(std::string_view text) {
  if (text == "binary") return Averaging::Binary;
  if (text == "macro") return Averaging::Macro;
  throw ConfigError("unknown metric averaging '" + std::string(text) + "' (expected binary or macro)");
}

std::string format_metric(double value) {
  if (!std::isfinite(value)) return "nan";
  const auto scaled = static_cast<long long>(std::floor(value * 1e4 + 0.5));
  const long long whole = scaled / 10000;
  const long long frac = scaled % 10000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%04lld", scaled < 0 ? "-" : "", std::llabs(whole), std::llabs(frac));
  return buf;
}

// ------------------------------------------------------------------ recipes

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits on `sep` outside parentheses.
std::vector<std::string> split_top(std::string_view text, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (const char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::size_t parse_size(std::string_view v, std::string_view token) {
  std::size_t out = 0;
  if (v.empty() || v.find_first_not_of("0123456789") != std::string_view::npos) {
    throw ConfigError("bad number '" + std::string(v) + "' in '" + std::string(token) + "'");
  }
  for (const char c : v) out = out * 10 + static_cast<std::size_t>(c - '0');
  return out;
}

struct Call {
  std::string name;
  std::vector<std::string> args;
};

Call parse_call(std::string_view token) {
  const std::string t = trim(token);
  Call call;
  const std::size_t open = t.find('(');
  if (open == std::string::npos) {
    call.name = lower(t);
    return call;
  }
  if (t.back() != ')') throw ConfigError("unbalanced parentheses in '" + t + "'");
  call.name = lower(trim(std::string_view(t).substr(0, open)));
  const std::string inner = t.substr(open + 1, t.size() - open - 2);
  if (!trim(inner).empty()) call.args = split_top(inner, ',');
  return call;
}

void parse_ngram_args(FeatureSpec& spec, const Call& call, std::string_view token) {
  for (const auto& arg : call.args) {
    const std::size_t eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + std::string(token) + "'");
    const std::string key = lower(trim(std::string_view(arg).substr(0, eq)));
    const std::string value = trim(std::string_view(arg).substr(eq + 1));
    if (key == "max") {
      spec.max_features = parse_size(value, token);
      if (spec.max_features == 0) throw ConfigError("max must be >= 1 in '" + std::string(token) + "'");
    } else if (key == "n") {
      const std::size_t dots = value.find("..");
      if (dots == std::string::npos) {
        spec.n_min = spec.n_max = static_cast<int>(parse_size(value, token));
      } else {
        spec.n_min = static_cast<int>(parse_size(std::string_view(value).substr(0, dots), token));
        spec.n_max = static_cast<int>(parse_size(std::string_view(value).substr(dots + 2), token));
      }
      if (spec.n_min < 1 || spec.n_min > spec.n_max) {
        throw ConfigError("n-gram range must satisfy 1 <= min <= max in '" + std::string(token) + "'");
      }
    } else {
      throw ConfigError("unknown argument '" + key + "' in '" + std::string(token) + "'");
    }
  }
}

}  // namespace

std::string FeatureSpec::text() const {
  switch (source) {
    case FeatureSource::Bow:
    case FeatureSource::Tfidf:
      return std::string(source == FeatureSource::Bow ? "bow" : "tfidf") + "(max=" + std::to_string(max_features) +
             ",n=" + std::to_string(n_min) + ".." + std::to_string(n_max) + ")";
    case FeatureSource::Sentiment: return "sentiment";
    case FeatureSource::Doc2Vec: return "doc2vec(dim=" + std::to_string(dim) + ")";
    case FeatureSource::Sent2Vec: return "sent2vec(" + resource + ")";
  }
  return "?";
}

std::string FeatureSpec::display() const {
  switch (source) {
    case FeatureSource::Bow: return "BoW";
    case FeatureSource::Tfidf: return "TF-IDF";
    case FeatureSource::Sentiment: return "Sentiment";
    case FeatureSource::Doc2Vec: return "Doc2Vec";
    case FeatureSource::Sent2Vec: return "Sent2Vec";
  }
  return "?";
}

std::string Recipe::text() const {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p.text();
  return out;
}

std::string Recipe::display() const {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p.display();
  return out;
}

Recipe parse_recipe(std::string_view text) {
  Recipe recipe;
  if (trim(text).empty()) throw ConfigError("empty feature recipe");
  for (const auto& token : split_top(text, '+')) {
    if (token.empty()) throw ConfigError("empty part in feature recipe '" + std::string(text) + "'");
    const Call call = parse_call(token);
    FeatureSpec spec;
    if (call.name == "bow" || call.name == "tfidf") {
      spec.source = call.name == "bow" ? FeatureSource::Bow : FeatureSource::Tfidf;
      parse_ngram_args(spec, call, token);
    } else if (call.name == "sentiment") {
      if (!call.args.empty()) throw ConfigError("sentiment takes no arguments: '" + token + "'");
      spec.source = FeatureSource::Sentiment;
    } else if (call.name == "doc2vec") {
      spec.source = FeatureSource::Doc2Vec;
      for (const auto& arg : call.args) {
        const std::size_t eq = arg.find('=');
        if (eq == std::string::npos || lower(trim(std::string_view(arg).substr(0, eq))) != "dim") {
          throw ConfigError("doc2vec accepts only dim=<n>: '" + token + "'");
        }
        spec.dim = parse_size(trim(std::string_view(arg).substr(eq + 1)), token);
        if (spec.dim == 0) throw ConfigError("dim must be >= 1 in '" + token + "'");
      }
    } else if (call.name == "sent2vec") {
      spec.source = FeatureSource::Sent2Vec;
      if (call.args.size() > 1) throw ConfigError("sent2vec takes one resource: '" + token + "'");
      if (!call.args.empty()) spec.resource = call.args.front();
      if (spec.resource.starts_with("fake:")) parse_size(spec.resource.substr(5), token);
    } else {
      throw ConfigError("unknown feature source '" + call.name + "' in recipe '" + std::string(text) +
                        "' (expected bow, tfidf, sentiment, doc2vec or sent2vec)");
    }
    // bow and tfidf both produce "ngram:" columns, so they cannot be combined.
    const auto family = [](FeatureSource f) { return f == FeatureSource::Tfidf ? FeatureSource::Bow : f; };
    for (const auto& prev : recipe.parts) {
      if (family(prev.source) == family(spec.source)) {
        throw ConfigError("feature source repeated in recipe '" + std::string(text) + "': '" + token + "'");
      }
    }
    recipe.parts.push_back(std::move(spec));
  }
  return recipe;
}

std::string NeuralSpec::text() const {
  std::string out = cell == neural::CellKind::Lstm ? "bilstm(" : "bigru(";
  out += vectors == WordVectors::Glove ? "glove:" + resource : "word2vec:" + std::to_string(dim);
  return out + ")";
}

std::string NeuralSpec::row_label() const { return cell == neural::CellKind::Lstm ? "Bi-LSTM" : "Bi-GRU"; }

std::string NeuralSpec::display() const { return vectors == WordVectors::Glove ? "GloVe" : "Word2vec"; }

NeuralSpec parse_neural(std::string_view text) {
  const Call call = parse_call(text);
  NeuralSpec spec;
  if (call.name == "bilstm") {
    spec.cell = neural::CellKind::Lstm;
  } else if (call.name == "bigru") {
    spec.cell = neural::CellKind::Gru;
  } else {
    throw ConfigError("unknown model '" + call.name + "' (expected bilstm or bigru)");
  }
  if (call.args.size() != 1) throw ConfigError("model needs one embedding argument: '" + std::string(text) + "'");
  const std::string arg = call.args.front();
  const std::size_t colon = arg.find(':');
  const std::string kind = lower(arg.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : arg.substr(colon + 1);
  if (kind == "glove") {
    spec.vectors = WordVectors::Glove;
    if (!rest.empty()) spec.resource = rest;
    if (spec.resource.starts_with("fake:")) parse_size(spec.resource.substr(5), text);
  } else if (kind == "word2vec") {
    spec.vectors = WordVectors::Word2Vec;
    if (!rest.empty()) spec.dim = parse_size(rest, text);
    if (spec.dim == 0) throw ConfigError("word2vec dim must be >= 1");
  } else {
    throw ConfigError("unknown word vectors '" + kind + "' (expected glove or word2vec)");
  }
  return spec;
}

// ---------------------------------------------------------------- options

namespace {

std::string options_key(const RunOptions& o, bool features_only) {
  std::ostringstream s;
  s << "split=" << format_double(o.split_ratio) << ";seed=" << o.seed << ";stratified=" << o.stratified
    << ";keep_hashtag_text=" << o.strip.keep_hashtag_text << ";sentiment_on_clean=" << o.sentiment_on_clean
    << ";ranking=" << (o.ranking == features::VocabRanking::TotalFrequency ? "total" : "doc")
    << ";d2v=" << o.doc2vec.window << ',' << o.doc2vec.negatives << ',' << o.doc2vec.epochs << ','
    << format_double(o.doc2vec.lr_start) << ',' << format_double(o.doc2vec.lr_end) << ',' << o.doc2vec.min_count
    << ',' << o.doc2vec.infer_steps << ";transductive=" << o.doc2vec_transductive
    << ";resources=" << o.resource_dir.generic_string();
  if (features_only) return s.str();
  const auto& c = o.classifier;
  s << ";w2v=" << o.word2vec.window << ',' << o.word2vec.negatives << ',' << o.word2vec.epochs << ','
    << format_double(o.word2vec.lr_start) << ',' << format_double(o.word2vec.lr_end) << ','
    << o.word2vec.min_count << ";lr=" << format_double(c.lr.learning_rate) << ',' << c.lr.epochs << ','
    << format_double(c.lr.l2) << ";dt=" << c.dt.max_depth << ',' << c.dt.min_samples_split << ','
    << format_double(c.dt.min_impurity_decrease) << ";rf=" << c.rf.n_trees << ','
    << (c.rf.max_features == classifiers::MaxFeatures::Sqrt ? "sqrt" : "all") << ',' << c.rf.bootstrap
    << ";nb=" << static_cast<int>(c.nb) << ";rnn=" << o.rnn.hidden << ',' << o.rnn.max_len << ','
    << o.rnn.batch_size << ',' << format_double(o.rnn.lr) << ',' << format_double(o.rnn.momentum) << ','
    << o.rnn.epochs << ',' << format_double(o.rnn.clip_norm) << ";averaging=" << to_string(o.averaging);
  return s.str();
}

std::string split_key(const RunOptions& o) {
  std::ostringstream s;
  s << format_double(o.split_ratio) << ';' << o.seed << ';' << o.stratified << ';' << o.strip.keep_hashtag_text;
  return s.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string ExperimentSpec::row_label() const {
  return neural ? neural->row_label() : std::string(classifiers::to_string(classifier));
}

std::string ExperimentSpec::features_label() const { return neural ? neural->display() : recipe.display(); }

std::string ExperimentSpec::canonical() const {
  std::string model = neural ? neural->text() : std::string(classifiers::to_string(classifier));
  return "model=" + model + ";recipe=" + (neural ? "" : recipe.text()) + ";" + options_key(options, false);
}

std::string ExperimentSpec::digest() const { return hex64(fnv1a64(canonical())); }

// ----------------------------------------------------------------- hygiene

HygieneMonitor::HygieneMonitor(std::span<const LabeledDocument> test) {
  for (const auto& d : test) test_ids_.insert(d.id);
}

std::size_t HygieneMonitor::record_fit(std::string_view stage, std::span<const std::string> ids) {
  std::size_t hits = 0;
  for (const auto& id : ids) hits += test_ids_.contains(id) ? 1 : 0;
  const std::lock_guard lock(mutex_);
  hits_ += hits;
  ++stages_[std::string(stage)];
  return hits;
}

std::size_t HygieneMonitor::test_accesses() const {
  const std::lock_guard lock(mutex_);
  return hits_;
}

std::map<std::string, std::size_t> HygieneMonitor::stages() const {
  const std::lock_guard lock(mutex_);
  return stages_;
}

// ---------------------------------------------------------------- execution

namespace {

template <class T>
std::vector<std::string> ids_of(std::span<const T> docs) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) {
    if constexpr (requires { d.doc_id; }) {
      ids.push_back(d.doc_id);
    } else {
      ids.push_back(d.id);
    }
  }
  return ids;
}

std::filesystem::path resolve(const RunOptions& o, const std::string& resource) {
  const std::filesystem::path p(resource);
  return p.is_absolute() || o.resource_dir.empty() ? p : o.resource_dir / p;
}

std::vector<std::string> index_labels(std::string_view prefix, std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t k = 0; k < n; ++k) labels.push_back(std::string(prefix) + ":" + std::to_string(k));
  return labels;
}

FeatureMatrix rows_matrix(std::vector<std::string> ids, std::size_t dim, std::string_view prefix,
                          const std::function<std::span<const double>(std::size_t)>& row) {
  FeatureMatrix m(std::move(ids), index_labels(prefix, dim));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = row(r);
    std::copy(src.begin(), src.end(), m.row(r).begin());
  }
  return m;
}

std::uint64_t doc_seed(std::uint64_t seed, std::string_view id) { return SplitMix64::mix(seed ^ fnv1a64(id)); }

}  // namespace

PreparedSplit prepare_split(std::vector<LabeledDocument> train, std::vector<LabeledDocument> test,
                            const RunOptions& options) {
  const textprep::Pipeline pipeline(textprep::StopwordList::bundled(), textprep::Lemmatizer::bundled(),
                                    options.strip);
  PreparedSplit data;
  data.train = std::move(train);
  data.test = std::move(test);
  auto fill = [&](const std::vector<LabeledDocument>& docs, std::vector<TokenSequence>& clean,
                  std::vector<TokenSequence>& light, std::vector<Label>& labels) {
    for (const auto& d : docs) {
      clean.push_back(pipeline.clean(d).sequence);
      light.push_back({d.id, pipeline.light_tokens(d.text)});
      labels.push_back(d.label);
    }
  };
  fill(data.train, data.train_clean, data.train_light, data.train_labels);
  fill(data.test, data.test_clean, data.test_light, data.test_labels);
  return data;
}

FeatureBlock build_feature_block(const FeatureSpec& part, const PreparedSplit& data, const RunOptions& options,
                                 HygieneMonitor& monitor) {
  FeatureBlock block;
  const std::span<const TokenSequence> train(data.train_clean);
  const std::span<const TokenSequence> test(data.test_clean);
  switch (part.source) {
    case FeatureSource::Bow:
    case FeatureSource::Tfidf: {
      const bool bow = part.source == FeatureSource::Bow;
      block.test_accesses += monitor.record_fit(bow ? "bow.vocabulary" : "tfidf.vocabulary", ids_of(train));
      const auto vocab = features::fit_vocabulary(train, part.n_min, part.n_max, part.max_features, options.ranking);
      if (bow) {
        block.train = features::bow_matrix(train, vocab);
        block.test = features::bow_matrix(test, vocab);
      } else {
        const auto idf = features::compute_idf(vocab);
        block.train = features::tfidf_matrix(train, vocab, idf);
        block.test = features::tfidf_matrix(test, vocab, idf);
      }
      break;
    }
    case FeatureSource::Sentiment: {
      const auto& lexicon = features::SentimentLexicon::bundled();
      const auto& tr = options.sentiment_on_clean ? data.train_clean : data.train_light;
      const auto& te = options.sentiment_on_clean ? data.test_clean : data.test_light;
      block.train = features::sentiment_matrix(tr, lexicon);
      block.test = features::sentiment_matrix(te, lexicon);
      break;
    }
    case FeatureSource::Doc2Vec: {
      embeddings::Doc2VecParams params = options.doc2vec;
      params.dim = part.dim;
      params.seed = options.seed;
      const std::size_t d = part.dim;
      if (options.doc2vec_transductive) {
        std::vector<TokenSequence> all(train.begin(), train.end());
        all.insert(all.end(), test.begin(), test.end());
        block.test_accesses += monitor.record_fit("doc2vec.train", ids_of(std::span<const TokenSequence>(all)));
        const auto model = embeddings::train_doc2vec(all, params);
        block.train = rows_matrix(ids_of(train), d, "doc2vec", [&](std::size_t r) { return model.doc_vector(r); });
        block.test = rows_matrix(ids_of(test), d, "doc2vec",
                                 [&](std::size_t r) { return model.doc_vector(train.size() + r); });
      } else {
        block.test_accesses += monitor.record_fit("doc2vec.train", ids_of(train));
        const auto model = embeddings::train_doc2vec(train, params);
        block.train = rows_matrix(ids_of(train), d, "doc2vec", [&](std::size_t r) { return model.doc_vector(r); });
        std::vector<std::vector<double>> inferred;
        inferred.reserve(test.size());
        for (const auto& doc : test) {
          inferred.push_back(embeddings::infer_doc_vector(model, doc.tokens, params.infer_steps,
                                                          doc_seed(options.seed, doc.doc_id))
                                 .values);
        }
        block.test = rows_matrix(ids_of(test), d, "doc2vec", [&](std::size_t r) {
          return std::span<const double>(inferred[r]);
        });
      }
      break;
    }
    case FeatureSource::Sent2Vec: {
      embeddings::SentenceEmbeddingSet set;
      if (part.resource.starts_with("fake:")) {
        const std::size_t dim = parse_size(part.resource.substr(5), part.resource);
        std::vector<std::string> ids = ids_of(std::span<const LabeledDocument>(data.train));
        for (const auto& d : data.test) ids.push_back(d.id);
        std::stringstream buffer;
        embeddings::write_fake_sentence_embeddings(buffer, ids, dim, options.seed);
        set = embeddings::read_sentence_embeddings(buffer);
      } else {
        set = embeddings::load_sentence_embeddings(resolve(options, part.resource));
      }
      const auto train_ids = ids_of(train);
      const auto test_ids = ids_of(test);
      block.train = embeddings::sentence_matrix(set, train_ids);
      block.test = embeddings::sentence_matrix(set, test_ids);
      break;
    }
  }
  return block;
}

namespace {

void finish_metrics(CellResult& result, std::span<const Label> predicted, std::span<const Label> truth,
                    Averaging averaging) {
  result.counts = confusion(predicted, truth);
  result.metrics = averaging == Averaging::Binary ? metrics(result.counts) : macro_metrics(result.counts);
}

CellResult blank_result(const ExperimentSpec& spec, const PreparedSplit& data) {
  CellResult r;
  r.table = spec.table;
  r.title = spec.title;
  r.classifier = spec.row_label();
  r.features = spec.features_label();
  r.spec_digest = spec.digest();
  r.seed = spec.options.seed;
  r.averaging = spec.options.averaging;
  r.train_rows = data.train.size();
  r.test_rows = data.test.size();
  return r;
}

void check_hygiene(const CellResult& r, const RunOptions& options) {
  if (r.test_accesses > 0 && !options.doc2vec_transductive) {
    throw Error("hygiene violation: fitted components saw " + std::to_string(r.test_accesses) +
                " test-document accesses");
  }
}

void classify(const ExperimentSpec& spec, const PreparedSplit& data, std::span<const FeatureBlock* const> blocks,
              HygieneMonitor& monitor, CellResult& result) {
  std::vector<FeatureMatrix> train_parts;
  std::vector<FeatureMatrix> test_parts;
  for (const FeatureBlock* b : blocks) {
    train_parts.push_back(b->train);
    test_parts.push_back(b->test);
    result.test_accesses += b->test_accesses;
  }
  const FeatureMatrix x_train = concat_features(train_parts);
  const FeatureMatrix x_test = concat_features(test_parts);
  result.width = x_train.cols();
  if (x_test.cols() != result.width) throw Error("train and test feature widths differ");

  classifiers::ClassifierConfig config = spec.options.classifier;
  config.rf.seed = spec.options.seed;
  config.lr.seed = spec.options.seed;
  result.test_accesses += monitor.record_fit("classifier", x_train.row_ids());
  check_hygiene(result, spec.options);
  const auto model = classifiers::fit(spec.classifier, x_train, data.train_labels, config);
  finish_metrics(result, classifiers::predict(model, x_test), data.test_labels, spec.options.averaging);
}

void run_neural(const ExperimentSpec& spec, const PreparedSplit& data, HygieneMonitor& monitor, CellResult& result) {
  const NeuralFit fitted = fit_neural(*spec.neural, data, spec.options, monitor);
  result.width = fitted.width;
  result.test_accesses += fitted.test_accesses;
  const auto test_batch = neural::make_batch(data.test_clean, fitted.model.index, fitted.model.hyper.max_len);
  std::vector<Label> predicted;
  for (const double p : neural::bi_rnn_forward(fitted.model, test_batch)) {
    predicted.push_back(p >= 0.5 ? Label::Hate : Label::NonHate);
  }
  finish_metrics(result, predicted, data.test_labels, spec.options.averaging);
}

}  // namespace

NeuralFit fit_neural(const NeuralSpec& spec, const PreparedSplit& data, const RunOptions& options,
                     HygieneMonitor& monitor) {
  const std::span<const TokenSequence> train(data.train_clean);
  const auto train_ids = ids_of(train);
  NeuralFit out;

  out.test_accesses += monitor.record_fit("rnn.vocabulary", train_ids);
  std::vector<std::string> vocab = neural::sequence_vocabulary(train);

  embeddings::EmbeddingTable table;
  if (spec.vectors == WordVectors::Glove) {
    if (spec.resource.starts_with("fake:")) {
      const std::size_t dim = parse_size(spec.resource.substr(5), spec.resource);
      std::stringstream buffer;
      embeddings::write_fake_word_vectors(buffer, vocab, dim, options.seed);
      table = embeddings::read_glove(buffer, dim);
    } else {
      table = embeddings::load_glove(resolve(options, spec.resource));
    }
  } else {
    embeddings::Word2VecParams params = options.word2vec;
    params.dim = spec.dim;
    params.seed = options.seed;
    out.test_accesses += monitor.record_fit("word2vec.train", train_ids);
    table = embeddings::train_word2vec(train, params);
  }
  out.width = table.dim();

  neural::RNNHyper hyper = options.rnn;
  hyper.seed = options.seed;
  neural::RNNModel model = neural::init_model(spec.cell, hyper, std::move(vocab), &table, table.dim());
  const auto train_batch = neural::make_batch(train, model.index, hyper.max_len, data.train_labels);
  out.test_accesses += monitor.record_fit("rnn.train", train_ids);
  if (out.test_accesses > 0) {
    throw Error("hygiene violation: fitted components saw " + std::to_string(out.test_accesses) +
                " test-document accesses");
  }
  out.model = neural::bptt_train(std::move(model), train_batch);
  return out;
}

CellResult run_on_split(const ExperimentSpec& spec, const PreparedSplit& data) {
  HygieneMonitor monitor(data.test);
  CellResult result = blank_result(spec, data);
  if (spec.neural) {
    run_neural(spec, data, monitor, result);
    return result;
  }
  if (spec.recipe.parts.empty()) throw ConfigError("experiment has an empty feature recipe");
  std::vector<FeatureBlock> blocks;
  for (const auto& part : spec.recipe.parts) blocks.push_back(build_feature_block(part, data, spec.options, monitor));
  std::vector<const FeatureBlock*> ptrs;
  for (const auto& b : blocks) ptrs.push_back(&b);
  classify(spec, data, ptrs, monitor, result);
  return result;
}

CellResult run_experiment(const ExperimentSpec& spec, std::span<const LabeledDocument> docs) {
  corpus::DatasetSplit s = corpus::split(docs, spec.options.split_ratio, spec.options.seed, spec.options.stratified);
  const PreparedSplit data = prepare_split(std::move(s.train), std::move(s.test), spec.options);
  return run_on_split(spec, data);
}

namespace {

// Runs tasks[0..n) on up to `jobs` threads; each task index runs exactly once.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace

std::vector<CellResult> run_matrix(std::span<const ExperimentSpec> specs, std::span<const LabeledDocument> docs,
                                   std::size_t jobs) {
  if (specs.empty()) throw ConfigError("run_matrix: no experiments");

  // Splits shared by cells with the same split settings.
  struct SplitEntry {
    std::unique_ptr<PreparedSplit> data;
    std::unique_ptr<HygieneMonitor> monitor;
    std::string error;
  };
  std::map<std::string, SplitEntry> splits;
  for (const auto& spec : specs) {
    const std::string key = split_key(spec.options);
    if (splits.contains(key)) continue;
    SplitEntry entry;
    try {
      corpus::DatasetSplit s = corpus::split(docs, spec.options.split_ratio, spec.options.seed,
                                             spec.options.stratified);
      entry.data = std::make_unique<PreparedSplit>(prepare_split(std::move(s.train), std::move(s.test), spec.options));
      entry.monitor = std::make_unique<HygieneMonitor>(entry.data->test);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    splits.emplace(key, std::move(entry));
  }

  // Feature blocks shared by cells with the same part and feature settings.
  struct BlockEntry {
    const FeatureSpec* part = nullptr;
    const ExperimentSpec* spec = nullptr;
    std::string split;
    FeatureBlock block;
    std::string error;
  };
  std::vector<BlockEntry> blocks;
  std::map<std::string, std::size_t> block_index;
  std::vector<std::vector<std::size_t>> cell_blocks(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    if (spec.neural) continue;
    for (const auto& part : spec.recipe.parts) {
      const std::string key = split_key(spec.options) + "|" + part.text() + "|" + options_key(spec.options, true);
      auto [it, inserted] = block_index.emplace(key, blocks.size());
      if (inserted) blocks.push_back({&part, &spec, split_key(spec.options), {}, {}});
      cell_blocks[i].push_back(it->second);
    }
  }
  parallel_for(blocks.size(), jobs, [&](std::size_t b) {
    BlockEntry& entry = blocks[b];
    SplitEntry& split = splits.at(entry.split);
    if (!split.data) {
      entry.error = split.error;
      return;
    }
    try {
      entry.block = build_feature_block(*entry.part, *split.data, entry.spec->options, *split.monitor);
    } catch (const std::exception& e) {
      entry.error = std::string(entry.part->display()) + ": " + e.what();
    }
  });

  std::vector<CellResult> results(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    const ExperimentSpec& spec = specs[i];
    SplitEntry& split = splits.at(split_key(spec.options));
    CellResult& result = results[i];
    if (!split.data) {
      result.table = spec.table;
      result.title = spec.title;
      result.classifier = spec.row_label();
      result.features = spec.features_label();
      result.spec_digest = spec.digest();
      result.seed = spec.options.seed;
      result.averaging = spec.options.averaging;
      result.error = split.error;
      return;
    }
    result = blank_result(spec, *split.data);
    try {
      if (spec.neural) {
        run_neural(spec, *split.data, *split.monitor, result);
      } else {
        if (spec.recipe.parts.empty()) throw ConfigError("experiment has an empty feature recipe");
        std::vector<const FeatureBlock*> ptrs;
        for (const std::size_t b : cell_blocks[i]) {
          if (!blocks[b].error.empty()) throw Error(blocks[b].error);
          ptrs.push_back(&blocks[b].block);
        }
        classify(spec, *split.data, ptrs, *split.monitor, result);
      }
    } catch (const std::exception& e) {
      result.metrics.reset();
      result.error = e.what();
    }
  });
  return results;
}

// ------------------------------------------------------------------ presets

std::vector<ExperimentSpec> Preset::expand(const RunOptions& options) const {
  std::vector<ExperimentSpec> specs;
  for (const auto& t : tables) {
    for (const auto kind : t.classifiers) {
      ExperimentSpec s;
      s.table = t.id;
      s.title = t.title;
      s.recipe = *t.recipe;
      s.classifier = kind;
      s.options = options;
      specs.push_back(std::move(s));
    }
    for (const auto& m : t.models) {
      ExperimentSpec s;
      s.table = t.id;
      s.title = t.title;
      s.neural = m;
      s.options = options;
      specs.push_back(std::move(s));
    }
  }
  return specs;
}

Preset parse_preset(std::string_view text) {
  Preset preset;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    return ConfigError("preset line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw fail("malformed section header '" + t + "'");
      PresetTable table;
      table.id = trim(std::string_view(t).substr(1, t.size() - 2));
      for (const auto& other : preset.tables) {
        if (other.id == table.id) throw fail("duplicate section '" + table.id + "'");
      }
      preset.tables.push_back(std::move(table));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value', found '" + t + "'");
    const std::string key = lower(trim(std::string_view(t).substr(0, eq)));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      if (preset.tables.empty()) {
        if (key != "name") throw fail("unknown global key '" + key + "' (only 'name' is allowed)");
        preset.name = value;
        continue;
      }
      PresetTable& table = preset.tables.back();
      if (key == "title") {
        table.title = value;
      } else if (key == "features") {
        table.recipe = parse_recipe(value);
      } else if (key == "classifiers") {
        for (const auto& c : split_top(value, ',')) table.classifiers.push_back(classifiers::parse_classifier(c));
      } else if (key == "models") {
        for (const auto& m : split_top(value, ',')) table.models.push_back(parse_neural(m));
      } else {
        throw fail("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.starts_with("preset line")) throw;
      throw fail(msg);
    }
  }
  for (const auto& table : preset.tables) {
    if (table.classifiers.empty() && table.models.empty()) {
      throw ConfigError("preset section '" + table.id + "' lists no classifiers or models");
    }
    if (!table.classifiers.empty() && !table.recipe) {
      throw ConfigError("preset section '" + table.id + "' has classifiers but no features");
    }
  }
  if (preset.tables.empty()) throw ConfigError("preset defines no sections");
  return preset;
}

Preset load_preset(std::string_view name_or_path) {
  if (const auto bundled = resources::preset(name_or_path)) return parse_preset(*bundled);
  std::ifstream in{std::filesystem::path(name_or_path)};
  if (!in) throw ConfigError("unknown preset '" + std::string(name_or_path) + "' (not bundled, no such file)");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_preset(ss.str());
}

// ------------------------------------------------------------------ reports

ReportTable make_report(std::span<const CellResult> cells) {
  ReportTable table;
  if (!cells.empty()) table.averaging = cells.front().averaging;
  for (const auto& c : cells) {
    ReportRow row;
    row.classifier = c.classifier;
    row.features = c.features;
    if (c.metrics) {
      row.values = {format_metric(c.metrics->accuracy), format_metric(c.metrics->precision),
                    format_metric(c.metrics->recall), format_metric(c.metrics->f1)};
    } else {
      row.values = {"ERROR", "ERROR", "ERROR", "ERROR"};
    }
    const bool neural = c.classifier.starts_with("Bi-");
    if (table.sections.empty() || table.sections.back().id != c.table) {
      table.sections.push_back({c.table, c.title, table.rows.size(), 0, 0, neural});
    }
    ReportSection& s = table.sections.back();
    ++s.count;
    s.width = std::max(s.width, c.width);
    s.neural = s.neural || neural;
    table.rows.push_back(std::move(row));
  }
  return table;
}

void emit_report(std::ostream& out, const ReportTable& table, ReportFormat format) {
  if (table.rows.empty()) throw Error("emit_report: empty table");
  if (format == ReportFormat::Csv) {
    const std::vector<std::string> header{"Classifier", "Features", "Accuracy", "Precision", "Recall", "F1"};
    csv::write_row(out, header);
    for (const auto& r : table.rows) {
      const std::vector<std::string> fields{r.classifier, r.features, r.values[0], r.values[1], r.values[2], r.values[3]};
      csv::write_row(out, fields);
    }
    return;
  }
  out << "# Results\n\nMetrics: " << to_string(table.averaging)
      << (table.averaging == Averaging::Binary ? " (positive class: hate)" : " (mean over both classes)") << ".\n";
  std::vector<ReportSection> sections = table.sections;
  if (sections.empty()) sections.push_back({"results", "Results", 0, table.rows.size(), 0, false});
  for (const auto& s : sections) {
    out << "\n## " << (s.title.empty() ? s.id : s.title) << "\n\n";
    if (!s.neural && s.width > 0) out << "Feature width: " << s.width << "\n\n";
    out << (s.neural ? "| | Embeddings Used | Accuracy | Precision | Recall | F1 Score |\n|---|---|---|---|---|---|\n"
                     : "| | Accuracy | Precision | Recall | F1 Score |\n|---|---|---|---|---|\n");
    for (std::size_t i = s.first; i < s.first + s.count; ++i) {
      const auto& r = table.rows[i];
      out << "| " << r.classifier << " | ";
      if (s.neural) out << r.features << " | ";
      out << r.values[0] << " | " << r.values[1] << " | " << r.values[2] << " | " << r.values[3] << " |\n";
    }
  }
}

void emit_report(const std::filesystem::path& path, const ReportTable& table, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report: " + path.string());
  emit_report(out, table, format);
  if (!out) throw ConfigError("failed writing report: " + path.string());
}

ReportTable parse_report_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const std::vector<std::string> header{"Classifier", "Features", "Accuracy", "Precision", "Recall", "F1"};
  if (t.header != header) throw Error("report csv: unexpected header");
  if (!t.skipped.empty()) throw Error("report csv: malformed record " + std::to_string(t.skipped.front().record));
  ReportTable table;
  for (const auto& f : t.rows) table.rows.push_back({f[0], f[1], {f[2], f[3], f[4], f[5]}});
  return table;
}

std::string provenance_json(std::span<const CellResult> cells, std::string_view command,
                            std::span<const std::pair<std::string, std::string>> settings) {
  nlohmann::ordered_json j;
  j["tool"] = "hatebench";
  j["command"] = std::string(command);
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [k, v] : settings) s[k] = v;
  j["settings"] = s;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  std::size_t total_accesses = 0;
  for (const auto& c : cells) {
    nlohmann::ordered_json cell;
    cell["table"] = c.table;
    cell["classifier"] = c.classifier;
    cell["features"] = c.features;
    cell["spec_digest"] = c.spec_digest;
    cell["seed"] = c.seed;
    cell["averaging"] = std::string(to_string(c.averaging));
    cell["width"] = c.width;
    cell["train_rows"] = c.train_rows;
    cell["test_rows"] = c.test_rows;
    cell["test_document_accesses_during_fit"] = c.test_accesses;
    total_accesses += c.test_accesses;
    if (c.metrics) {
      cell["status"] = "ok";
      cell["confusion"] = {{"tp", c.counts.tp}, {"fp", c.counts.fp}, {"tn", c.counts.tn}, {"fn", c.counts.fn}};
      cell["metrics"] = {{"accuracy", format_metric(c.metrics->accuracy)},
                         {"precision", format_metric(c.metrics->precision)},
                         {"recall", format_metric(c.metrics->recall)},
                         {"f1", format_metric(c.metrics->f1)}};
    } else {
      cell["status"] = "error";
      cell["error"] = c.error;
    }
    list.push_back(std::move(cell));
  }
  j["test_document_accesses_during_fit"] = total_accesses;
  j["cells"] = std::move(list);
  return j.dump(2) + "\n";
}

// -------------------------------------------------------------------- audit

AuditReport leakage_audit(std::span<const LabeledDocument> train, std::span<const LabeledDocument> test,
                          const textprep::Pipeline& pipeline) {
  AuditReport report;
  report.test_rows = test.size();
  std::unordered_set<std::string> exact;
  std::set<std::vector<std::string>> near;
  for (const auto& d : train) {
    exact.insert(unicode::nfc(d.text));
    const auto cleaned = pipeline.clean(d);
    if (!cleaned.empty_after_clean) near.insert(cleaned.sequence.tokens);
    ++report.train_balance[d.label == Label::Hate ? 1 : 0];
  }
  for (const auto& d : test) {
    ++report.test_balance[d.label == Label::Hate ? 1 : 0];
    if (exact.contains(unicode::nfc(d.text))) {
      ++report.exact_duplicates;
      report.exact_ids.push_back(d.id);
      continue;
    }
    const auto cleaned = pipeline.clean(d);
    if (!cleaned.empty_after_clean && near.contains(cleaned.sequence.tokens)) {
      ++report.near_duplicates;
      report.near_ids.push_back(d.id);
    }
  }
  return report;
}

std::string audit_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["test_rows"] = r.test_rows;
  j["exact_duplicates"] = r.exact_duplicates;
  j["near_duplicates"] = r.near_duplicates;
  j["train_balance"] = {{"nonhate", r.train_balance[0]}, {"hate", r.train_balance[1]}};
  j["test_balance"] = {{"nonhate", r.test_balance[0]}, {"hate", r.test_balance[1]}};
  j["exact_duplicate_ids"] = r.exact_ids;
  j["near_duplicate_ids"] = r.near_ids;
  return j.dump(2) + "\n";
}

std::size_t plant_duplicates(std::span<const LabeledDocument> train, std::vector<LabeledDocument>& test,
                             double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("plant_duplicates: fraction must lie in [0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(test.size())));
  if (k > train.size()) throw Error("plant_duplicates: not enough train documents to copy");
  std::vector<std::size_t> test_pos(test.size());
  std::vector<std::size_t> train_pos(train.size());
  for (std::size_t i = 0; i < test_pos.size(); ++i) test_pos[i] = i;
  for (std::size_t i = 0; i < train_pos.size(); ++i) train_pos[i] = i;
  SplitMix64 rng_test = SplitMix64::substream(seed, 31);
  SplitMix64 rng_train = SplitMix64::substream(seed, 32);
  shuffle(test_pos, rng_test);
  shuffle(train_pos, rng_train);
  for (std::size_t i = 0; i < k; ++i) {
    const LabeledDocument& src = train[train_pos[i]];
    LabeledDocument& dst = test[test_pos[i]];
    dst.text = src.text;
    dst.label = src.label;
  }
  return k;
}

// ---------------------------------------------------------------- manifest

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file for hashing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_manifest(const std::filesystem::path& dir, std::span<const std::filesystem::path> inputs,
                    std::span<const std::string> outputs, std::string_view name) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json in = nlohmann::ordered_json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& name : outputs) out.push_back({{"path", name}, {"sha256", sha256_file(dir / name)}});
  j["inputs"] = std::move(in);
  j["outputs"] = std::move(out);
  const std::filesystem::path target = dir / std::string(name);
  std::ofstream f(target, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + target.string());
  f << j.dump(2) << '\n';
}

}  // namespace hatebench::evalharness
