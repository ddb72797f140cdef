#include "sstkg/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sstkg/error.hpp"

namespace sstkg {
namespace {

[[noreturn]] void fail(const std::filesystem::path& file, std::size_t line, const std::string& field,
                       const std::string& what) {
  std::ostringstream msg;
  msg << file.string() << ":" << line;
  if (!field.empty()) msg << ": field '" << field << "'";
  msg << ": " << what;
  throw ValidationError(msg.str());
}

double parse_real(const std::string& text, const std::filesystem::path& file, std::size_t line,
                  const std::string& field) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) fail(file, line, field, "not a number: '" + text + "'");
  if (!std::isfinite(value)) fail(file, line, field, "non-finite value");
  return value;
}

std::size_t parse_index(const std::string& text, const std::filesystem::path& file, std::size_t line,
                        const std::string& field) {
  std::size_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    fail(file, line, field, "not a non-negative integer: '" + text + "'");
  }
  return value;
}

struct CsvReader {
  std::ifstream in;
  std::filesystem::path file;
  std::size_t line_no = 0;

  explicit CsvReader(const std::filesystem::path& path) : in(path), file(path) {
    if (!in) throw ValidationError("cannot open " + path.string());
  }

  // Reads one logical record; quoted fields may span physical lines.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    const std::size_t start_line = line_no;
    auto balanced = [](const std::string& s) {
      std::size_t quotes = 0;
      for (char c : s) quotes += c == '"' ? 1 : 0;
      return quotes % 2 == 0;
    };
    while (!balanced(line)) {
      std::string more;
      if (!std::getline(in, more)) fail(file, start_line, "", "unterminated quoted field");
      ++line_no;
      line += '\n';
      line += more;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fields = split_csv_line(line);
    return true;
  }
};

void expect_header(CsvReader& reader, const std::vector<std::string>& expected) {
  std::vector<std::string> header;
  if (!reader.next(header)) fail(reader.file, 1, "", "empty file, expected header");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  if (header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    fail(reader.file, reader.line_no, "", "header must be '" + want + "'");
  }
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

ParsedDataset parse_dataset(const std::filesystem::path& entities_file,
                            const std::filesystem::path& records_file, const TimeIndex& time_index) {
  time_index.validate();

  std::vector<Entity> entities;
  std::map<std::string, std::size_t, std::less<>> by_id;
  {
    CsvReader reader(entities_file);
    expect_header(reader, {"id", "lat", "lon", "category"});
    std::vector<std::string> row;
    while (reader.next(row)) {
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != 4) fail(entities_file, reader.line_no, "", "expected 4 fields, got " + std::to_string(row.size()));
      Entity e;
      e.id = row[0];
      if (e.id.empty()) fail(entities_file, reader.line_no, "id", "empty id");
      e.location.latitude = parse_real(row[1], entities_file, reader.line_no, "lat");
      e.location.longitude = parse_real(row[2], entities_file, reader.line_no, "lon");
      try {
        e.location.validate();
      } catch (const ValidationError& err) {
        fail(entities_file, reader.line_no, e.location.latitude < -90.0 || e.location.latitude > 90.0 ? "lat" : "lon",
             err.what());
      }
      e.category = row[3];
      e.series = TimeSeries(time_index.slot_count);
      if (!by_id.emplace(e.id, entities.size()).second) {
        fail(entities_file, reader.line_no, "id", "duplicate id '" + e.id + "'");
      }
      entities.push_back(std::move(e));
    }
  }
  {
    CsvReader reader(records_file);
    expect_header(reader, {"id", "slot", "value"});
    std::vector<std::string> row;
    while (reader.next(row)) {
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != 3) fail(records_file, reader.line_no, "", "expected 3 fields, got " + std::to_string(row.size()));
      auto it = by_id.find(row[0]);
      if (it == by_id.end()) fail(records_file, reader.line_no, "id", "unknown entity '" + row[0] + "'");
      const std::size_t slot = parse_index(row[1], records_file, reader.line_no, "slot");
      if (slot >= time_index.slot_count) {
        fail(records_file, reader.line_no, "slot",
             "slot " + std::to_string(slot) + " outside [0, " + std::to_string(time_index.slot_count) + ")");
      }
      const double value = parse_real(row[2], records_file, reader.line_no, "value");
      if (value < 0.0) fail(records_file, reader.line_no, "value", "negative record");
      TimeSeries& series = entities[it->second].series;
      if (series.present(slot)) fail(records_file, reader.line_no, "slot", "duplicate record for '" + row[0] + "'");
      series.set(slot, value);
    }
  }

  ParsedDataset out;
  std::vector<Entity> kept;
  kept.reserve(entities.size());
  for (Entity& e : entities) {
    if (e.series.present_count(time_index.full_range()) == 0 || e.series.sum(time_index.full_range()) <= 0.0) {
      out.excluded_ids.push_back(e.id);
    } else {
      kept.push_back(std::move(e));
    }
  }
  if (!out.excluded_ids.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < out.excluded_ids.size(); ++i) ids += (i ? ", " : "") + out.excluded_ids[i];
    out.warnings.push_back("excluded entities with zero records: " + ids);
  }
  out.entities = EntitySet(time_index, std::move(kept));
  return out;
}

}  // namespace sstkg
