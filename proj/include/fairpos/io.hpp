#pragma once

#include "fairpos/dataset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fairpos {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws SchemaError when absent.
  std::size_t column(const std::string& name) const;
};

/// RFC 4180 style parsing: quoted fields, doubled quotes, CRLF tolerated.
/// Throws ParseError on ragged rows or unterminated quotes.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Picks the analysis columns. Names must exist and be pairwise distinct
/// (SchemaError); covariate and outcome cells must be numeric (ParseError).
RawRows select_columns(const CsvTable& table, const std::string& treatment, const std::string& outcome,
                       const std::vector<std::string>& covariates);

std::string csv_escape(const std::string& field);

/// Writes to a sibling temp file and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace fairpos
