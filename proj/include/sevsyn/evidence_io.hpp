#pragma once

// Evidence file: one row per EvidenceItem.
//
//   kind,wave,band,level,count,sample_size,parent_count,mean_log,sd_log,detected
//
// Columns a kind does not use must be left empty; `detected` (0 or 1) is
// optional for NormalLogCount and empty otherwise. Every row is validated
// when loaded and errors carry the file's line number.

#include <filesystem>
#include <span>
#include <vector>

#include "sevsyn/csv.hpp"
#include "sevsyn/likelihood.hpp"

namespace sevsyn {

std::vector<EvidenceItem> parse_evidence(const CsvTable& table, const AgeGrid& grid, const AgeAggregation& agg);
std::vector<EvidenceItem> load_evidence(const std::filesystem::path& path, const AgeGrid& grid,
                                        const AgeAggregation& agg);
void write_evidence(const std::filesystem::path& path, std::span<const EvidenceItem> evidence);

}  // namespace sevsyn
