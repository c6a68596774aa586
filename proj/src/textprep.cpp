#include "hatebench/textprep.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "hatebench/resources.hpp"
#include "hatebench/unicode.hpp"

namespace hatebench::textprep {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line) for every non-empty, non-comment line with trailing CR removed.
template <class Fn>
void for_each_data_line(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') fn(line);
    start = end + 1;
  }
}

// Splits on Unicode whitespace.
std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  std::size_t token_start = std::string_view::npos;
  while (pos < text.size()) {
    const std::size_t here = pos;
    const char32_t c = unicode::next_code_point(text, pos);
    if (unicode::is_space(c)) {
      if (token_start != std::string_view::npos) {
        out.push_back(text.substr(token_start, here - token_start));
        token_start = std::string_view::npos;
      }
    } else if (token_start == std::string_view::npos) {
      token_start = here;
    }
  }
  if (token_start != std::string_view::npos) out.push_back(text.substr(token_start));
  return out;
}

// Byte offsets of the code points of `s`.
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  std::size_t pos = 0;
  while (pos < s.size()) {
    offsets.push_back(pos);
    unicode::next_code_point(s, pos);
  }
  offsets.push_back(s.size());
  return offsets;
}

// Trims punctuation from both ends. When `keep_marker` is set, a leading
// '@' or '#' stops the left trim.
std::string_view trim_punct(std::string_view token, bool keep_marker) {
  const std::vector<std::size_t> off = code_point_offsets(token);
  std::size_t lo = 0;
  std::size_t hi = off.size() - 1;
  while (lo < hi) {
    std::size_t p = off[lo];
    const char32_t c = unicode::next_code_point(token, p);
    if (keep_marker && (c == U'@' || c == U'#')) break;
    if (!unicode::is_punct(c)) break;
    ++lo;
  }
  while (hi > lo) {
    std::size_t p = off[hi - 1];
    const char32_t c = unicode::next_code_point(token, p);
    if (!unicode::is_punct(c)) break;
    --hi;
  }
  return token.substr(off[lo], off[hi] - off[lo]);
}

const std::regex& url_pattern() {
  static const std::regex re(R"(^(https?://|www\.))", std::regex::icase | std::regex::optimize);
  return re;
}

const std::regex& number_pattern() {
  static const std::regex re(R"(^[0-9]+([.,:][0-9]+)*$)", std::regex::optimize);
  return re;
}

bool is_lower_alpha(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_consonant(std::string_view s, std::size_t i) {
  switch (s[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return false;
    case 'y':
      return i == 0 || !is_consonant(s, i - 1);
    default:
      return true;
  }
}

bool has_vowel(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_consonant(s, i)) return true;
  }
  return false;
}

// Porter's measure: the m in [C](VC)^m[V].
int measure(std::string_view s) {
  int m = 0;
  std::size_t i = 0;
  while (i < s.size() && is_consonant(s, i)) ++i;
  while (i < s.size()) {
    while (i < s.size() && !is_consonant(s, i)) ++i;
    if (i >= s.size()) break;
    while (i < s.size() && is_consonant(s, i)) ++i;
    ++m;
  }
  return m;
}

// Ends consonant-vowel-consonant with the last consonant not w, x or y.
bool ends_cvc(std::string_view s) {
  const std::size_t n = s.size();
  if (n < 3) return false;
  if (!is_consonant(s, n - 3) || is_consonant(s, n - 2) || !is_consonant(s, n - 1)) return false;
  const char last = s[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

std::string repair_stem(std::string stem) {
  if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
  const std::size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && is_consonant(stem, n - 1)) {
    const char c = stem[n - 1];
    if (c != 'l' && c != 's' && c != 'z') stem.pop_back();
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  return stem;
}

// One pass of the suffix rules; returns the input unchanged if none applies.
std::string apply_suffix_rules(const std::string& w) {
  const std::size_t n = w.size();
  if (ends_with(w, "ies") || ends_with(w, "ied")) {
    if (n > 4) return w.substr(0, n - 3) + "y";
    if (n == 4) return w.substr(0, n - 3) + "ie";
    return w;
  }
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") || ends_with(w, "zzes")) {
    return n > 4 ? w.substr(0, n - 2) : w;
  }
  if (ends_with(w, "s")) {
    if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is") || n - 1 < 3) return w;
    return w.substr(0, n - 1);
  }
  if (ends_with(w, "eed")) {
    return measure(std::string_view(w).substr(0, n - 3)) > 0 ? w.substr(0, n - 1) : w;
  }
  for (const std::string_view suffix : {std::string_view("ing"), std::string_view("ed")}) {
    if (ends_with(w, suffix)) {
      std::string stem = w.substr(0, n - suffix.size());
      if (stem.size() < 2 || !has_vowel(stem)) return w;
      return repair_stem(std::move(stem));
    }
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------- stopwords

StopwordList::StopwordList(std::span<const std::string> words) {
  for (const auto& w : words) {
    if (!w.empty()) words_.insert(unicode::to_lower(w));
  }
}

StopwordList StopwordList::parse(std::string_view text) {
  std::vector<std::string> words;
  for_each_data_line(text, [&](std::string_view line) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    if (!line.empty()) words.emplace_back(line);
  });
  return StopwordList(words);
}

StopwordList StopwordList::load(const std::filesystem::path& path) { return parse(read_text(path)); }

const StopwordList& StopwordList::bundled() {
  static const StopwordList list = parse(resources::stopwords());
  return list;
}

// ----------------------------------------------------------------- patterns

std::string strip_patterns(std::string_view text, const StripOptions& options) {
  std::string out;
  for (const std::string_view token : split_whitespace(text)) {
    const std::string_view core = trim_punct(token, /*keep_marker=*/true);
    std::string kept;
    if (core.empty()) {
      kept = token;  // pure punctuation, left for the tokenizer
    } else if (core.front() == '@') {
      continue;
    } else if (core.front() == '#') {
      if (!options.keep_hashtag_text) continue;
      kept = token;
      kept.erase(kept.find('#'), 1);
    } else if (std::regex_search(core.begin(), core.end(), url_pattern()) ||
               std::regex_match(core.begin(), core.end(), number_pattern())) {
      continue;
    } else {
      kept = token;
    }
    if (kept.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += kept;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lowered = unicode::to_lower(text);
  std::vector<std::string> tokens;
  for (const std::string_view raw : split_whitespace(lowered)) {
    const std::string_view core = trim_punct(raw, /*keep_marker=*/false);
    if (!core.empty()) tokens.emplace_back(core);
  }
  return tokens;
}

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens,
                                          const StopwordList& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stoplist.contains(t)) out.push_back(t);
  }
  return out;
}

// --------------------------------------------------------------- lemmatizer

Lemmatizer::Lemmatizer() : Lemmatizer(bundled()) {}

Lemmatizer::Lemmatizer(std::unordered_map<std::string, std::string> exceptions)
    : exceptions_(std::move(exceptions)) {}

Lemmatizer Lemmatizer::parse(std::string_view text) {
  std::unordered_map<std::string, std::string> table;
  std::size_t line_no = 0;
  for_each_data_line(text, [&](std::string_view line) {
    ++line_no;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      throw ConfigError("lemma table: entry " + std::to_string(line_no) +
                        " is not 'inflected<TAB>lemma'");
    }
    table.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  });
  return Lemmatizer(std::move(table));
}

Lemmatizer Lemmatizer::load(const std::filesystem::path& path) { return parse(read_text(path)); }

const Lemmatizer& Lemmatizer::bundled() {
  static const Lemmatizer lemmatizer = parse(resources::lemma_exceptions());
  return lemmatizer;
}

std::string Lemmatizer::lemma(std::string_view token) const {
  // Rules are re-applied until nothing changes (at most a few rounds), which
  // makes lemma() idempotent: "hundreds" -> "hundred" is then caught by the
  // exception table instead of the -ed rule.
  std::string current(token);
  for (int round = 0; round < 4; ++round) {
    if (const auto it = exceptions_.find(current); it != exceptions_.end()) return it->second;
    if (!is_lower_alpha(current)) return current;
    std::string next = apply_suffix_rules(current);
    if (next.empty() || next == current) return current;
    current = std::move(next);
  }
  return current;
}

std::vector<std::string> Lemmatizer::operator()(std::span<const std::string> tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lemma(t));
  return out;
}

std::vector<std::string> lemmatize(std::span<const std::string> tokens) {
  return Lemmatizer::bundled()(tokens);
}

// ----------------------------------------------------------------- pipeline

Pipeline::Pipeline() : Pipeline(StopwordList::bundled(), Lemmatizer::bundled()) {}

Pipeline::Pipeline(StopwordList stoplist, Lemmatizer lemmatizer, StripOptions options)
    : stoplist_(std::move(stoplist)), lemmatizer_(std::move(lemmatizer)), options_(options) {}

std::vector<std::string> Pipeline::light_tokens(std::string_view text) const {
  return tokenize(strip_patterns(unicode::nfc(text), options_));
}

CleanResult Pipeline::clean(std::string_view doc_id, std::string_view text) const {
  const std::vector<std::string> tokens = light_tokens(text);
  CleanResult result;
  result.sequence.doc_id = std::string(doc_id);
  result.sequence.tokens = lemmatizer_(remove_stopwords(tokens, stoplist_));
  result.empty_after_clean = result.sequence.tokens.empty();
  return result;
}

CleanResult Pipeline::clean(const corpus::LabeledDocument& doc) const { return clean(doc.id, doc.text); }

CleanResult clean_pipeline(const corpus::LabeledDocument& doc, const StopwordList& stoplist) {
  return Pipeline(stoplist, Lemmatizer::bundled()).clean(doc);
}

}  // namespace hatebench::textprep
