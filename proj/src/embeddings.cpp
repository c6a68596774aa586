#include "hatebench/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hatebench::embeddings {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// One term of the negative-sampling objective for (h, out, label). Adds
// dL/dh to d_h and returns dL/d(h . out); the caller scales h for dL/d out.
double sgns_term(const double* h, const double* out, std::size_t dim, double label, double* d_h,
                 double& loss) {
  const double f = dot(h, out, dim);
  loss += label > 0.5 ? softplus(-f) : softplus(f);
  const double g = sigmoid(f) - label;
  for (std::size_t i = 0; i < dim; ++i) d_h[i] += g * out[i];
  return g;
}

// Applies one prediction to the output matrix in place and accumulates the
// input-side gradient in d_h. Negatives equal to the target are skipped.
void sgns_update(const double* h, std::size_t target, std::size_t negatives, const NoiseSampler& sampler,
                 SplitMix64& rng, std::vector<double>& word_out, std::size_t dim, double lr,
                 double* d_h, bool update_out) {
  double loss = 0.0;
  for (std::size_t k = 0; k <= negatives; ++k) {
    std::size_t word = target;
    double label = 1.0;
    if (k > 0) {
      word = sampler.sample(rng);
      if (word == target) continue;
      label = 0.0;
    }
    double* out = word_out.data() + word * dim;
    const double g = sgns_term(h, out, dim, label, d_h, loss);
    if (update_out) {
      for (std::size_t i = 0; i < dim; ++i) out[i] -= lr * g * h[i];
    }
  }
}

double learning_rate(double start, double end, std::size_t done, std::size_t total) {
  if (total == 0) return start;
  return start - (start - end) * static_cast<double>(done) / static_cast<double>(total);
}

std::vector<std::vector<std::size_t>> index_corpus(std::span<const TokenSequence> corpus, const Vocabulary& vocab) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : doc.tokens) {
      if (const auto it = vocab.index.find(t); it != vocab.index.end()) ids.push_back(it->second);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_count(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  std::size_t v = 0;
  for (const char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  out = v;
  return true;
}

std::vector<double> random_unit_vector(std::uint64_t seed, std::string_view key, std::size_t dim) {
  SplitMix64 rng = SplitMix64::substream(seed, fnv1a64(key));
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
    norm2 += x * x;
  }
  const double inv = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 0.0;
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

// -------------------------------------------------------------------- table

EmbeddingTable::EmbeddingTable(std::size_t dim, std::string source) : dim_(dim), source_(std::move(source)) {}

const double* EmbeddingTable::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : values_.data() + it->second * dim_;
}

void EmbeddingTable::add(std::string token, std::span<const double> values) {
  if (values.size() != dim_) {
    throw Error("embedding for '" + token + "' has length " + std::to_string(values.size()) + ", expected " +
                std::to_string(dim_));
  }
  if (!index_.emplace(token, tokens_.size()).second) throw Error("duplicate embedding token '" + token + "'");
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error("cosine_similarity: length mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  double uv = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

// ---------------------------------------------------------------- gradients

SgnsGradient sgns_loss_grad(std::span<const double> input, std::span<const double> positive,
                            const std::vector<std::span<const double>>& negatives) {
  const std::size_t dim = input.size();
  if (positive.size() != dim) throw Error("sgns_loss_grad: dimension mismatch");
  SgnsGradient g;
  g.d_input.assign(dim, 0.0);
  const double gp = sgns_term(input.data(), positive.data(), dim, 1.0, g.d_input.data(), g.loss);
  g.d_positive.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) g.d_positive[i] = gp * input[i];
  for (const auto& neg : negatives) {
    if (neg.size() != dim) throw Error("sgns_loss_grad: dimension mismatch");
    const double gn = sgns_term(input.data(), neg.data(), dim, 0.0, g.d_input.data(), g.loss);
    std::vector<double> d(dim);
    for (std::size_t i = 0; i < dim; ++i) d[i] = gn * input[i];
    g.d_negatives.push_back(std::move(d));
  }
  return g;
}

PvdmGradient pvdm_loss_grad(std::span<const double> doc_vector,
                            const std::vector<std::span<const double>>& context_words,
                            std::span<const double> target,
                            const std::vector<std::span<const double>>& negatives) {
  const std::size_t dim = doc_vector.size();
  const double n = static_cast<double>(context_words.size() + 1);
  std::vector<double> h(doc_vector.begin(), doc_vector.end());
  for (const auto& w : context_words) {
    if (w.size() != dim) throw Error("pvdm_loss_grad: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) h[i] += w[i];
  }
  for (double& x : h) x /= n;
  const SgnsGradient inner = sgns_loss_grad(h, target, negatives);
  PvdmGradient g;
  g.loss = inner.loss;
  g.d_doc.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) g.d_doc[i] = inner.d_input[i] / n;
  return g;
}

NoiseSampler::NoiseSampler(std::span<const std::size_t> counts) {
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (const std::size_t c : counts) {
    total += std::pow(static_cast<double>(c), 0.75);
    cumulative_.push_back(total);
  }
}

std::size_t NoiseSampler::sample(SplitMix64& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

// ------------------------------------------------------------------ word2vec

Vocabulary build_vocabulary(std::span<const TokenSequence> corpus, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [token, count] : kept) {
    vocab.index.emplace(token, vocab.tokens.size());
    vocab.tokens.push_back(std::move(token));
    vocab.counts.push_back(count);
  }
  return vocab;
}

std::vector<double> init_vectors(std::size_t rows, std::size_t dim, std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng = SplitMix64::substream(seed, stream);
  std::vector<double> v(rows * dim);
  const double half = 0.5 / static_cast<double>(dim);
  for (double& x : v) x = rng.uniform(-half, half);
  return v;
}

EmbeddingTable train_word2vec(std::span<const TokenSequence> corpus, const Word2VecParams& params) {
  if (corpus.empty()) throw Error("train_word2vec: empty corpus");
  if (params.dim == 0) throw Error("train_word2vec: dim must be >= 1");
  const Vocabulary vocab = build_vocabulary(corpus, params.min_count);
  if (vocab.tokens.size() < 2) {
    throw Error("train_word2vec: vocabulary has " + std::to_string(vocab.tokens.size()) +
                " word(s) at min_count " + std::to_string(params.min_count) + ", need at least 2");
  }
  const std::size_t dim = params.dim;
  std::vector<double> word_in = init_vectors(vocab.tokens.size(), dim, params.seed, 0);
  std::vector<double> word_out(vocab.tokens.size() * dim, 0.0);
  const auto sentences = index_corpus(corpus, vocab);
  const NoiseSampler sampler(vocab.counts);
  SplitMix64 rng = SplitMix64::substream(params.seed, 1);

  std::size_t positions = 0;
  for (const auto& s : sentences) positions += s.size();
  const std::size_t total = positions * params.epochs;
  std::size_t done = 0;
  std::vector<double> grad(dim);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& s : sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double lr = learning_rate(params.lr_start, params.lr_end, done++, total);
        double* h = word_in.data() + s[i] * dim;
        const std::size_t lo = i >= params.window ? i - params.window : 0;
        const std::size_t hi = std::min(s.size(), i + params.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          std::fill(grad.begin(), grad.end(), 0.0);
          sgns_update(h, s[j], params.negatives, sampler, rng, word_out, dim, lr, grad.data(), true);
          for (std::size_t k = 0; k < dim; ++k) h[k] -= lr * grad[k];
        }
      }
    }
  }

  EmbeddingTable table(dim, "trained");
  for (std::size_t w = 0; w < vocab.tokens.size(); ++w) {
    table.add(vocab.tokens[w], std::span<const double>(word_in.data() + w * dim, dim));
  }
  return table;
}

// ------------------------------------------------------------------- doc2vec

namespace {

// One PV-DM pass over a document. Updates the document vector, and the word
// matrices too when `train_words` is set.
void pvdm_pass(const std::vector<std::size_t>& ids, double* doc, std::vector<double>& word_in,
               std::vector<double>& word_out, const Doc2VecParams& p, const NoiseSampler& sampler,
               SplitMix64& rng, bool train_words, std::size_t& done, std::size_t total,
               std::vector<double>& h, std::vector<double>& grad) {
  const std::size_t dim = p.dim;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const double lr = learning_rate(p.lr_start, p.lr_end, done++, total);
    const std::size_t lo = t >= p.window ? t - p.window : 0;
    const std::size_t hi = std::min(ids.size(), t + p.window + 1);
    std::copy(doc, doc + dim, h.begin());
    std::size_t n = 1;
    for (std::size_t j = lo; j < hi; ++j) {
      if (j == t) continue;
      const double* w = word_in.data() + ids[j] * dim;
      for (std::size_t k = 0; k < dim; ++k) h[k] += w[k];
      ++n;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& x : h) x *= inv_n;

    std::fill(grad.begin(), grad.end(), 0.0);
    sgns_update(h.data(), ids[t], p.negatives, sampler, rng, word_out, dim, lr, grad.data(), train_words);

    const double step = lr * inv_n;
    for (std::size_t k = 0; k < dim; ++k) doc[k] -= step * grad[k];
    if (train_words) {
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == t) continue;
        double* w = word_in.data() + ids[j] * dim;
        for (std::size_t k = 0; k < dim; ++k) w[k] -= step * grad[k];
      }
    }
  }
}

}  // namespace

DocEmbeddingModel train_doc2vec(std::span<const TokenSequence> corpus, const Doc2VecParams& params) {
  if (corpus.empty()) throw Error("train_doc2vec: empty corpus");
  if (params.dim == 0) throw Error("train_doc2vec: dim must be >= 1");
  DocEmbeddingModel model;
  model.params = params;
  model.vocab = build_vocabulary(corpus, params.min_count);
  if (model.vocab.tokens.empty()) {
    throw Error("train_doc2vec: no word reaches min_count " + std::to_string(params.min_count));
  }
  const std::size_t dim = params.dim;
  model.word_in = init_vectors(model.vocab.tokens.size(), dim, params.seed, 0);
  model.word_out.assign(model.vocab.tokens.size() * dim, 0.0);
  model.doc_vectors = init_vectors(corpus.size(), dim, params.seed, 2);
  for (const auto& doc : corpus) model.doc_ids.push_back(doc.doc_id);

  const auto docs = index_corpus(corpus, model.vocab);
  const NoiseSampler sampler(model.vocab.counts);
  SplitMix64 rng = SplitMix64::substream(params.seed, 1);
  std::size_t positions = 0;
  for (const auto& d : docs) positions += d.size();
  const std::size_t total = positions * params.epochs;
  std::size_t done = 0;
  std::vector<double> h(dim);
  std::vector<double> grad(dim);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      pvdm_pass(docs[d], model.doc_vectors.data() + d * dim, model.word_in, model.word_out, params, sampler, rng,
                true, done, total, h, grad);
    }
  }
  return model;
}

InferredVector infer_doc_vector(const DocEmbeddingModel& model, std::span<const std::string> tokens,
                                std::size_t steps, std::uint64_t seed) {
  if (!model.trained()) throw Error("infer_doc_vector: model is not trained");
  const std::size_t dim = model.dim();
  std::vector<std::size_t> ids;
  for (const auto& t : tokens) {
    if (const auto it = model.vocab.index.find(t); it != model.vocab.index.end()) ids.push_back(it->second);
  }
  InferredVector result;
  if (ids.empty()) {
    result.values.assign(dim, 0.0);
    result.empty = true;
    return result;
  }
  result.values = init_vectors(1, dim, seed, 3);

  // The word matrices are never written when train_words is false; the
  // copies only satisfy the shared signature.
  std::vector<double> word_in = model.word_in;
  std::vector<double> word_out = model.word_out;
  const NoiseSampler sampler(model.vocab.counts);
  SplitMix64 rng = SplitMix64::substream(seed, 4);
  const std::size_t total = ids.size() * steps;
  std::size_t done = 0;
  std::vector<double> h(dim);
  std::vector<double> grad(dim);
  for (std::size_t step = 0; step < steps; ++step) {
    pvdm_pass(ids, result.values.data(), word_in, word_out, model.params, sampler, rng, false, done, total, h,
              grad);
  }
  return result;
}

// ------------------------------------------------------------------ file I/O

EmbeddingTable read_glove(std::istream& in, std::optional<std::size_t> expected_dim) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dim;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    std::size_t v_count = 0;
    std::size_t d_count = 0;
    if (line_no == 1 && fields.size() == 2 && parse_count(fields[0], v_count) && parse_count(fields[1], d_count)) {
      dim = d_count;
      continue;
    }
    if (fields.size() < 2) throw Error("word vectors: line " + std::to_string(line_no) + " has no values");
    const std::size_t width = fields.size() - 1;
    if (!dim) dim = width;
    if (width != *dim) {
      throw Error("word vectors: line " + std::to_string(line_no) + " has " + std::to_string(width) +
                  " values, expected " + std::to_string(*dim));
    }
    if (table.dim() == 0) {
      if (expected_dim && *expected_dim != *dim) {
        throw Error("word vectors: dimension " + std::to_string(*dim) + " does not match expected " +
                    std::to_string(*expected_dim));
      }
      table = EmbeddingTable(*dim, "glove-file");
    }
    values.clear();
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        values.push_back(parse_double(fields[k]));
      } catch (const Error&) {
        throw Error("word vectors: line " + std::to_string(line_no) + ": bad number '" + std::string(fields[k]) + "'");
      }
    }
    try {
      table.add(std::string(fields[0]), values);
    } catch (const Error& e) {
      throw Error("word vectors: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (dim && table.dim() == 0) table = EmbeddingTable(*dim, "glove-file");
  return table;
}

EmbeddingTable load_glove(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open word-vector file: " + path.string());
  return read_glove(in, expected_dim);
}

void write_glove(std::ostream& out, const EmbeddingTable& table, bool header) {
  if (header) out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    for (const double v : table.vector(i)) out << ' ' << format6(v);
    out << '\n';
  }
}

void write_fake_word_vectors(std::ostream& out, std::span<const std::string> tokens, std::size_t dim,
                             std::uint64_t seed) {
  for (const auto& token : tokens) {
    out << token;
    for (const double v : random_unit_vector(seed, token, dim)) out << ' ' << format6(v);
    out << '\n';
  }
}

SentenceEmbeddingSet read_sentence_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("sentence embeddings: missing 'N D' header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_spaces(line);
  std::size_t n = 0;
  SentenceEmbeddingSet set;
  if (header.size() != 2 || !parse_count(header[0], n) || !parse_count(header[1], set.dim)) {
    throw Error("sentence embeddings: malformed header '" + line + "', expected 'N D'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (fields.size() != set.dim + 1) {
      throw Error("sentence embeddings: line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size() - 1) + " values, expected " + std::to_string(set.dim));
    }
    std::string id(fields[0]);
    std::vector<double> values;
    values.reserve(set.dim);
    for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_double(fields[k]));
    if (!set.rows.emplace(id, std::move(values)).second) {
      throw Error("sentence embeddings: duplicate id '" + id + "' at line " + std::to_string(line_no));
    }
    set.ids.push_back(std::move(id));
  }
  if (set.ids.size() != n) {
    throw Error("sentence embeddings: header announces " + std::to_string(n) + " rows, file has " +
                std::to_string(set.ids.size()));
  }
  return set;
}

SentenceEmbeddingSet load_sentence_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sentence-embedding file: " + path.string());
  return read_sentence_embeddings(in);
}

void write_sentence_embeddings(std::ostream& out, const SentenceEmbeddingSet& set) {
  out << set.ids.size() << ' ' << set.dim << '\n';
  for (const auto& id : set.ids) {
    out << id;
    for (const double v : set.rows.at(id)) out << ' ' << format6(v);
    out << '\n';
  }
}

void write_fake_sentence_embeddings(std::ostream& out, std::span<const std::string> ids, std::size_t dim,
                                    std::uint64_t seed) {
  out << ids.size() << ' ' << dim << '\n';
  for (const auto& id : ids) {
    out << id;
    for (const double v : random_unit_vector(seed, id, dim)) out << ' ' << format6(v);
    out << '\n';
  }
}

FeatureMatrix sentence_matrix(const SentenceEmbeddingSet& set, std::span<const std::string> ids,
                              std::string_view prefix) {
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < set.dim; ++k) labels.push_back(std::string(prefix) + ":" + std::to_string(k));
  FeatureMatrix m(std::vector<std::string>(ids.begin(), ids.end()), std::move(labels));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto it = set.rows.find(ids[r]);
    if (it == set.rows.end()) throw Error("sentence embeddings: no row for document '" + ids[r] + "'");
    std::copy(it->second.begin(), it->second.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace hatebench::embeddings
