#pragma once

#include <optional>
#include <string_view>

namespace hatebench::resources {

// Data files compiled into the library from data/ at build time.
std::string_view stopwords();
std::string_view lemma_exceptions();
std::string_view sentiment_lexicon();

/// Bundled experiment presets by name ("paper_matrix").
std::optional<std::string_view> preset(std::string_view name);

}  // namespace hatebench::resources
