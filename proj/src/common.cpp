#include "hatebench/common.hpp"

namespace hatebench {

std::string_view to_string(Label label) { return label == Label::Hate ? "hate" : "nonhate"; }

Label parse_label(std::string_view text) {
  if (text == "hate") return Label::Hate;
  if (text == "nonhate") return Label::NonHate;
  throw Error("unknown label '" + std::string(text) + "' (expected hate or nonhate)");
}

}  // namespace hatebench
