#include "sevsyn/csv.hpp"

#include <sstream>

#include "sevsyn/errors.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

CsvTable::CsvTable(std::string source, std::vector<std::string> header, std::vector<CsvRow> rows)
    : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows)) {}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  if (const auto c = column(name)) return *c;
  throw DataError(source_, 1, "missing required column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view content, const std::string& source) {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') {
      if (end == content.size()) break;
      continue;
    }
    auto fields = text::split(line, ',');
    for (auto& f : fields) f = std::string(text::trim(f));
    if (header.empty()) {
      header = std::move(fields);
    } else {
      if (fields.size() != header.size())
        throw DataError(source, line_no,
                        "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
      rows.push_back({line_no, std::move(fields)});
    }
    if (end == content.size()) break;
  }
  if (header.empty()) throw DataError(source, 1, "file has no header row");
  return CsvTable(source, std::move(header), std::move(rows));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::size_t flush_every)
    : out_(path), path_(path), flush_every_(flush_every) {
  if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  if (flush_every_ && ++pending_ >= flush_every_) {
    out_.flush();
    pending_ = 0;
  }
  if (!out_) throw std::runtime_error("write failed on '" + path_.string() + "'");
}

}  // namespace sevsyn
