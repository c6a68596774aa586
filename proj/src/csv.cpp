#include "hatebench/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "hatebench/common.hpp"

namespace hatebench::csv {
namespace {

enum class RecordStatus { Ok, End, Malformed };

struct RawRecord {
  std::vector<std::string> fields;
  std::string error;
};

// Reads one record starting at `pos`. Malformed records are consumed up to
// the next line break outside quotes so reading can continue.
RecordStatus next_record(std::string_view data, std::size_t& pos, RawRecord& rec) {
  rec.fields.clear();
  rec.error.clear();
  if (pos >= data.size()) return RecordStatus::End;

  std::string field;
  bool bad = false;
  while (true) {
    field.clear();
    if (pos < data.size() && data[pos] == '"') {
      ++pos;
      bool closed = false;
      while (pos < data.size()) {
        const char c = data[pos++];
        if (c == '"') {
          if (pos < data.size() && data[pos] == '"') {
            field.push_back('"');
            ++pos;
          } else {
            closed = true;
            break;
          }
        } else {
          field.push_back(c);
        }
      }
      if (!closed) {
        rec.error = "unterminated quoted field";
        rec.fields.push_back(field);
        return RecordStatus::Malformed;
      }
      // After a closing quote only a delimiter or line end may follow.
      if (pos < data.size() && data[pos] != ',' && data[pos] != '\n' && data[pos] != '\r') {
        bad = true;
        rec.error = "unexpected character after closing quote";
        while (pos < data.size() && data[pos] != ',' && data[pos] != '\n' && data[pos] != '\r') {
          ++pos;
        }
      }
    } else {
      while (pos < data.size() && data[pos] != ',' && data[pos] != '\n' && data[pos] != '\r') {
        field.push_back(data[pos++]);
      }
    }
    rec.fields.push_back(field);

    if (pos >= data.size()) break;
    if (data[pos] == ',') {
      ++pos;
      continue;
    }
    if (data[pos] == '\r') ++pos;
    if (pos < data.size() && data[pos] == '\n') ++pos;
    break;
  }
  return bad ? RecordStatus::Malformed : RecordStatus::Ok;
}

bool is_blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && fields[0].empty();
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return npos;
}

Table read(std::istream& in) {
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::size_t pos = 0;
  // UTF-8 byte order mark.
  if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;

  Table table;
  RawRecord rec;
  RecordStatus status = next_record(data, pos, rec);
  if (status == RecordStatus::End) throw Error("csv: missing header row");
  if (status == RecordStatus::Malformed) throw Error("csv: malformed header row: " + rec.error);
  table.header = rec.fields;

  std::size_t record = 0;
  while ((status = next_record(data, pos, rec)) != RecordStatus::End) {
    if (status == RecordStatus::Ok && is_blank(rec.fields)) continue;
    ++record;
    if (status == RecordStatus::Malformed) {
      table.skipped.push_back({record, rec.error});
      continue;
    }
    if (rec.fields.size() != table.header.size()) {
      table.skipped.push_back({record, "expected " + std::to_string(table.header.size()) +
                                           " fields, found " + std::to_string(rec.fields.size())});
      continue;
    }
    table.rows.push_back(std::move(rec.fields));
  }
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  return read(in);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace hatebench::csv
