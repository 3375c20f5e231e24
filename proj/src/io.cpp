#include "fairpos/io.hpp"

#include "fairpos/error.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace fairpos {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw Error(ErrorCode::SchemaError, "missing column '" + name + "'");
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw Error(ErrorCode::ParseError, "stray quote in unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw Error(ErrorCode::ParseError, "empty CSV input");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(r + 1) + " has " +
                                             std::to_string(records[r].size()) + " fields, header has " +
                                             std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

namespace {

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  std::size_t b = 0, e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  if (b < e && cell[b] == '+') ++b;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, value);
  if (b == e || ec != std::errc() || ptr != cell.data() + e) {
    throw Error(ErrorCode::ParseError,
                "non-numeric value '" + cell + "' in column '" + column + "' at row " + std::to_string(row + 2));
  }
  return value;
}

}  // namespace

RawRows select_columns(const CsvTable& table, const std::string& treatment, const std::string& outcome,
                       const std::vector<std::string>& covariates) {
  std::set<std::string> seen;
  auto claim = [&](const std::string& name) {
    if (!seen.insert(name).second) throw Error(ErrorCode::SchemaError, "column '" + name + "' used twice");
  };
  claim(treatment);
  claim(outcome);
  for (const auto& c : covariates) claim(c);

  const std::size_t t_col = table.column(treatment);
  const std::size_t y_col = table.column(outcome);
  std::vector<std::size_t> x_cols;
  for (const auto& c : covariates) x_cols.push_back(table.column(c));

  const std::size_t n = table.rows.size();
  RawRows raw;
  raw.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x_cols.size()));
  raw.treatments.reserve(n);
  raw.outcomes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    raw.treatments.push_back(row[t_col]);
    raw.outcomes.push_back(parse_number(row[y_col], i, outcome));
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      raw.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_number(row[x_cols[j]], i, covariates[j]);
    }
  }
  return raw;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::BadConfig, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace fairpos
