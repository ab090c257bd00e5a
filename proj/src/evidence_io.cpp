#include "sevsyn/evidence_io.hpp"

#include <algorithm>
#include <array>

#include "sevsyn/errors.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

constexpr std::array<std::string_view, 10> kColumns = {"kind",         "wave",     "band",  "level",
                                                       "count",        "sample_size", "parent_count",
                                                       "mean_log",     "sd_log",   "detected"};

enum Col { Kind, Wave, Band, Level, Count, SampleSize, ParentCount, MeanLog, SdLog, Detected };

// Payload columns each kind reads; the rest must be empty.
std::vector<Col> payload_columns(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::DetectionCount: return {Count};
    case EvidenceKind::SeroSample: return {Count, SampleSize};
    case EvidenceKind::LogNormalEstimate: return {MeanLog, SdLog};
    case EvidenceKind::NormalLogCount: return {MeanLog, SdLog, Detected};
    case EvidenceKind::ConditionalOutcome: return {Count, ParentCount};
  }
  return {};
}

}  // namespace

std::vector<EvidenceItem> parse_evidence(const CsvTable& table, const AgeGrid& grid, const AgeAggregation& agg) {
  const auto& src = table.source();
  std::array<std::size_t, kColumns.size()> idx{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) idx[c] = table.require_column(kColumns[c]);
  for (const auto& name : table.header()) {
    bool known = false;
    for (auto c : kColumns) known = known || name == c;
    if (!known) throw DataError(src, 1, "unknown column '" + name + "'");
  }

  std::vector<EvidenceItem> out;
  for (const auto& row : table.rows()) {
    auto field = [&](Col c) -> const std::string& { return row.fields[idx[c]]; };
    auto fail = [&](const std::string& what) { throw DataError(src, row.line, what); };
    auto number = [&](Col c) {
      const auto v = text::to_double(field(c));
      if (!v) fail("column '" + std::string(kColumns[c]) + "': cannot parse '" + field(c) + "' as a number");
      return *v;
    };

    EvidenceItem item;
    item.line = row.line;
    try {
      item.kind = parse_evidence_kind(field(Kind));
      item.level = parse_level(field(Level));
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    const auto wave = text::to_int(field(Wave));
    if (!wave) fail("column 'wave': cannot parse '" + field(Wave) + "' as an integer");
    item.wave = static_cast<int>(*wave);
    item.band = field(Band);
    if (item.band.empty()) fail("column 'band' is empty");

    const auto used = payload_columns(item.kind);
    for (Col c : {Count, SampleSize, ParentCount, MeanLog, SdLog, Detected}) {
      const bool is_used = std::find(used.begin(), used.end(), c) != used.end();
      if (!is_used && !field(c).empty())
        fail("column '" + std::string(kColumns[c]) + "' must be empty for " + std::string(to_string(item.kind)));
      if (is_used && c != Detected && field(c).empty())
        fail("column '" + std::string(kColumns[c]) + "' is required for " + std::string(to_string(item.kind)));
    }
    for (Col c : used) {
      if (c == Detected) {
        const auto& v = field(Detected);
        if (v.empty() || v == "0") item.detected = false;
        else if (v == "1") item.detected = true;
        else fail("column 'detected' must be 0 or 1");
        continue;
      }
      const double v = number(c);
      switch (c) {
        case Count: item.count = v; break;
        case SampleSize: item.sample_size = v; break;
        case ParentCount: item.parent_count = v; break;
        case MeanLog: item.mean_log = v; break;
        case SdLog: item.sd_log = v; break;
        default: break;
      }
    }
    validate_item(item, grid, agg, src);
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<EvidenceItem> load_evidence(const std::filesystem::path& path, const AgeGrid& grid,
                                        const AgeAggregation& agg) {
  return parse_evidence(read_csv(path), grid, agg);
}

void write_evidence(const std::filesystem::path& path, std::span<const EvidenceItem> evidence) {
  CsvWriter out(path);
  out.row({kColumns.begin(), kColumns.end()});
  for (const auto& item : evidence) {
    std::vector<std::string> fields(kColumns.size());
    fields[Kind] = std::string(to_string(item.kind));
    fields[Wave] = std::to_string(item.wave);
    fields[Band] = item.band;
    fields[Level] = std::string(to_string(item.level));
    for (Col c : payload_columns(item.kind)) {
      switch (c) {
        case Count: fields[c] = text::format_double(item.count); break;
        case SampleSize: fields[c] = text::format_double(item.sample_size); break;
        case ParentCount: fields[c] = text::format_double(item.parent_count); break;
        case MeanLog: fields[c] = text::format_double(item.mean_log); break;
        case SdLog: fields[c] = text::format_double(item.sd_log); break;
        case Detected: fields[c] = item.detected ? "1" : "0"; break;
        default: break;
      }
    }
    out.row(fields);
  }
}

}  // namespace sevsyn
