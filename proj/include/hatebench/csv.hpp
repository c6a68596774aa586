#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hatebench::csv {

/// A record the reader could not accept. `record` is 1-based and counts data
/// records only (the header is record 0).
struct Malformed {
  std::size_t record = 0;
  std::string reason;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<Malformed> skipped;

  /// Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// RFC 4180 reader. Quoted fields may contain commas, doubled quotes and line
/// breaks; CRLF and LF line endings are both accepted. Records whose field
/// count differs from the header, with text after a closing quote, or with an
/// unterminated quote are skipped and listed in Table::skipped.
Table read(std::istream& in);

/// Throws ConfigError if the file cannot be opened.
Table read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace hatebench::csv
