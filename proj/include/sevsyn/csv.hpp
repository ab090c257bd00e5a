#pragma once

// Minimal comma-separated files: no quoting, '#' comment lines skipped,
// every row must have the header's field count.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sevsyn {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class CsvTable {
 public:
  CsvTable(std::string source, std::vector<std::string> header, std::vector<CsvRow> rows);

  const std::string& source() const { return source_; }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<CsvRow>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  /// Index of a required column; throws DataError naming the file.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<CsvRow> rows_;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view content, const std::string& source);

class CsvWriter {
 public:
  /// `flush_every` rows between explicit flushes; 0 leaves it to the stream.
  CsvWriter(const std::filesystem::path& path, std::size_t flush_every = 0);

  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t flush_every_;
  std::size_t pending_ = 0;
};

}  // namespace sevsyn
