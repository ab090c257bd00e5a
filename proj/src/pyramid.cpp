#include "sevsyn/pyramid.hpp"

#include <set>
#include <stdexcept>

#include "sevsyn/errors.hpp"

namespace sevsyn {

std::string_view to_string(SeverityLevel level) {
  switch (level) {
    case SeverityLevel::Inf: return "Inf";
    case SeverityLevel::S: return "S";
    case SeverityLevel::H: return "H";
    case SeverityLevel::I: return "I";
    case SeverityLevel::D: return "D";
  }
  return "?";
}

SeverityLevel parse_level(std::string_view text) {
  for (auto level : kAllLevels)
    if (to_string(level) == text) return level;
  throw ConfigError("unknown severity level '" + std::string(text) + "' (expected Inf, S, H, I or D)");
}

std::optional<SeverityLevel> parent(SeverityLevel level) {
  switch (level) {
    case SeverityLevel::Inf: return std::nullopt;
    case SeverityLevel::S: return SeverityLevel::Inf;
    case SeverityLevel::H: return SeverityLevel::S;
    case SeverityLevel::I:
    case SeverityLevel::D: return SeverityLevel::H;
  }
  return std::nullopt;
}

bool is_within(SeverityLevel inner, SeverityLevel outer) {
  for (std::optional<SeverityLevel> l = inner; l; l = parent(*l))
    if (*l == outer) return true;
  return false;
}

AgeGrid::AgeGrid(std::vector<std::string> labels, std::vector<double> population)
    : labels_(std::move(labels)), population_(std::move(population)) {
  if (labels_.empty()) throw ConfigError("age grid has no bands");
  if (labels_.size() != population_.size())
    throw ConfigError("age grid: " + std::to_string(labels_.size()) + " labels but " +
                      std::to_string(population_.size()) + " population counts");
  std::set<std::string> seen;
  for (std::size_t a = 0; a < labels_.size(); ++a) {
    if (labels_[a].empty()) throw ConfigError("age grid: empty band label");
    if (!seen.insert(labels_[a]).second) throw ConfigError("age grid: duplicate band label '" + labels_[a] + "'");
    if (!(population_[a] > 0.0)) throw ConfigError("age grid: population of '" + labels_[a] + "' must be > 0");
  }
}

std::vector<std::string> AgeGrid::standard_labels() {
  return {"<1", "1-4", "5-14", "15-24", "25-44", "45-64", "65+"};
}

AgeGrid AgeGrid::standard(std::vector<double> population) {
  return AgeGrid(standard_labels(), std::move(population));
}

std::optional<std::size_t> AgeGrid::index_of(std::string_view label) const {
  for (std::size_t a = 0; a < labels_.size(); ++a)
    if (labels_[a] == label) return a;
  return std::nullopt;
}

double CellProbs::conditional(SeverityLevel level) const {
  switch (level) {
    case SeverityLevel::Inf: return iar;
    case SeverityLevel::S: return s_given_inf;
    case SeverityLevel::H: return h_given_s;
    case SeverityLevel::I: return i_given_h;
    case SeverityLevel::D: return d_given_h;
  }
  return 0.0;
}

bool CellProbs::valid() const {
  for (auto level : kAllLevels) {
    const double c = conditional(level);
    if (!(c >= 0.0 && c <= 1.0)) return false;
  }
  return true;
}

void ConditionalProbs::validate() const {
  for (std::size_t a = 0; a < n_ages(); ++a) {
    double total = 0.0;
    for (int w : waves()) {
      const auto& cell = at(w, a);
      if (!cell.valid())
        throw std::invalid_argument("conditional probability outside [0,1] at wave " + std::to_string(w) +
                                    ", age " + std::to_string(a));
      total += cell.iar;
    }
    if (total > 1.0 + 1e-12)
      throw std::invalid_argument("attack rates of age " + std::to_string(a) + " sum above 1 across waves");
  }
}

CellCounts cell_latent_counts(const CellProbs& cell, double population) {
  CellCounts n{};
  n[0] = cell.iar * population;
  n[1] = cell.s_given_inf * n[0];
  n[2] = cell.h_given_s * n[1];
  n[3] = cell.i_given_h * n[2];
  n[4] = cell.d_given_h * n[2];
  return n;
}

CellRisks cell_risks(const CellProbs& cell) {
  CellRisks r;
  r.schr = cell.h_given_s;
  r.scir = cell.i_given_h * cell.h_given_s;
  r.scfr = cell.d_given_h * cell.h_given_s;
  r.chr = cell.h_given_s * cell.s_given_inf;
  r.cir = cell.i_given_h * cell.h_given_s * cell.s_given_inf;
  r.cfr = cell.d_given_h * cell.h_given_s * cell.s_given_inf;
  r.sar = cell.s_given_inf * cell.iar;
  return r;
}

LatentCounts compute_latent_counts(const ConditionalProbs& cond, const AgeGrid& grid) {
  if (cond.n_ages() != grid.size()) throw std::invalid_argument("conditional table and age grid disagree on size");
  cond.validate();
  LatentCounts out(cond.waves(), cond.n_ages());
  for (int w : cond.waves())
    for (std::size_t a = 0; a < cond.n_ages(); ++a) out.at(w, a) = cell_latent_counts(cond.at(w, a), grid.population(a));
  return out;
}

SeverityRisks compute_risks(const ConditionalProbs& cond) {
  cond.validate();
  SeverityRisks out(cond.waves(), cond.n_ages());
  for (int w : cond.waves())
    for (std::size_t a = 0; a < cond.n_ages(); ++a) out.at(w, a) = cell_risks(cond.at(w, a));
  return out;
}

AgeAggregation AgeAggregation::identity(const AgeGrid& grid) {
  AgeAggregation agg(grid.size());
  std::vector<std::pair<std::string, std::vector<std::string>>> bands;
  for (const auto& label : grid.labels()) bands.push_back({label, {label}});
  for (auto level : kAllLevels) agg.set_bands(level, grid, bands);
  return agg;
}

void AgeAggregation::set_bands(SeverityLevel level, const AgeGrid& grid,
                               const std::vector<std::pair<std::string, std::vector<std::string>>>& bands) {
  n_fine_ = grid.size();
  std::vector<Band> resolved;
  std::vector<int> covered(grid.size(), 0);
  std::set<std::string> names;
  for (const auto& [name, labels] : bands) {
    if (!names.insert(name).second)
      throw ConfigError("aggregation for level " + std::string(to_string(level)) + ": duplicate band '" + name + "'");
    if (labels.empty()) throw ConfigError("aggregation band '" + name + "' is empty");
    Band band{name, {}};
    for (const auto& label : labels) {
      const auto a = grid.index_of(label);
      if (!a) throw ConfigError("aggregation band '" + name + "': unknown age band '" + label + "'");
      if (covered[*a]++) throw ConfigError("aggregation for level " + std::string(to_string(level)) +
                                           ": age band '" + label + "' appears in more than one coarse band");
      band.members.push_back(*a);
    }
    resolved.push_back(std::move(band));
  }
  for (std::size_t a = 0; a < covered.size(); ++a)
    if (!covered[a])
      throw ConfigError("aggregation for level " + std::string(to_string(level)) + " does not cover age band '" +
                        grid.label(a) + "'");
  bands_[static_cast<std::size_t>(level)] = std::move(resolved);
}

const AgeAggregation::Band* AgeAggregation::find(SeverityLevel level, std::string_view name) const {
  for (const auto& band : bands(level))
    if (band.name == name) return &band;
  return nullptr;
}

std::vector<std::pair<std::string, double>> aggregate_counts(const LatentCounts& counts, const AgeAggregation& agg,
                                                             SeverityLevel level, int wave) {
  if (!agg.has_level(level))
    throw ConfigError("no age aggregation declared for level " + std::string(to_string(level)));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& band : agg.bands(level)) {
    double total = 0.0;
    for (auto a : band.members) total += counts.at(wave, a, level);
    out.emplace_back(band.name, total);
  }
  return out;
}

}  // namespace sevsyn
