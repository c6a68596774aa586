#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hatebench {

/// Binary class label. Hate is the positive class for every metric.
enum class Label : std::uint8_t { NonHate = 0, Hate = 1 };

/// "hate" / "nonhate", the spelling used in every file this project writes.
std::string_view to_string(Label label);

/// Inverse of to_string(). Throws Error on anything else.
Label parse_label(std::string_view text);

inline double label_value(Label label) { return label == Label::Hate ? 1.0 : 0.0; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: unknown recipe token, missing file, malformed config.
/// The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hatebench
