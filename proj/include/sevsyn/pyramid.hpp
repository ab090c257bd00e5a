#pragma once

// Severity pyramid: nested infection sets Inf > S > H > {I, D}, the
// conditional probabilities linking them, and the functional parameters
// (latent counts and case-severity risks) derived from those probabilities.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sevsyn {

enum class SeverityLevel { Inf = 0, S = 1, H = 2, I = 3, D = 4 };

inline constexpr std::array<SeverityLevel, 5> kAllLevels = {
    SeverityLevel::Inf, SeverityLevel::S, SeverityLevel::H, SeverityLevel::I, SeverityLevel::D};

std::string_view to_string(SeverityLevel level);
/// Accepts "Inf", "S", "H", "I", "D". Throws ConfigError otherwise.
SeverityLevel parse_level(std::string_view text);

/// The conditioning level: S -> Inf, H -> S, I -> H, D -> H. Inf has no
/// parent level (it is conditioned on the population).
std::optional<SeverityLevel> parent(SeverityLevel level);

/// True when `inner` is `outer` or a descendant of it (D is within H, S and Inf;
/// I and D are not nested in each other).
bool is_within(SeverityLevel inner, SeverityLevel outer);

class AgeGrid {
 public:
  AgeGrid(std::vector<std::string> labels, std::vector<double> population);

  /// The seven bands <1, 1-4, 5-14, 15-24, 25-44, 45-64, 65+.
  static AgeGrid standard(std::vector<double> population);
  static std::vector<std::string> standard_labels();

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& population() const { return population_; }
  double population(std::size_t age) const { return population_.at(age); }
  const std::string& label(std::size_t age) const { return labels_.at(age); }
  std::optional<std::size_t> index_of(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> population_;
};

/// Conditional probabilities of one (wave, age) cell.
struct CellProbs {
  double iar = 0;          // c_{Inf|Pop}
  double s_given_inf = 0;  // c_{S|Inf}
  double h_given_s = 0;    // c_{H|S}
  double i_given_h = 0;    // c_{I|H}
  double d_given_h = 0;    // c_{D|H}

  /// c_{l|parent(l)}; for Inf this is the attack rate.
  double conditional(SeverityLevel level) const;
  bool valid() const;
};

/// Wave-by-age table. Waves are labelled by their epidemic wave number
/// (1, 2, 3), not necessarily contiguous from 1.
template <typename Cell>
class WaveAgeTable {
 public:
  WaveAgeTable() = default;
  WaveAgeTable(std::vector<int> waves, std::size_t n_ages)
      : waves_(std::move(waves)), n_ages_(n_ages), cells_(waves_.size() * n_ages) {}

  const std::vector<int>& waves() const { return waves_; }
  std::size_t n_ages() const { return n_ages_; }
  std::optional<std::size_t> wave_index(int wave) const {
    for (std::size_t i = 0; i < waves_.size(); ++i)
      if (waves_[i] == wave) return i;
    return std::nullopt;
  }

  Cell& at(int wave, std::size_t age) { return cells_.at(offset(wave, age)); }
  const Cell& at(int wave, std::size_t age) const { return cells_.at(offset(wave, age)); }

 private:
  std::size_t offset(int wave, std::size_t age) const;

  std::vector<int> waves_;
  std::size_t n_ages_ = 0;
  std::vector<Cell> cells_;
};

class ConditionalProbs : public WaveAgeTable<CellProbs> {
 public:
  using WaveAgeTable::WaveAgeTable;

  /// Throws std::invalid_argument when an entry leaves [0,1] or the attack
  /// rates of one age sum above 1 across waves.
  void validate() const;
};

/// N_{w,a,l} for one cell, indexed by SeverityLevel.
using CellCounts = std::array<double, 5>;

class LatentCounts : public WaveAgeTable<CellCounts> {
 public:
  using WaveAgeTable::WaveAgeTable;

  double at(int wave, std::size_t age, SeverityLevel level) const {
    return WaveAgeTable::at(wave, age)[static_cast<std::size_t>(level)];
  }
  using WaveAgeTable::at;
};

struct CellRisks {
  double chr = 0, cir = 0, cfr = 0;
  double schr = 0, scir = 0, scfr = 0;
  double sar = 0;
};

using SeverityRisks = WaveAgeTable<CellRisks>;

CellCounts cell_latent_counts(const CellProbs& cell, double population);
CellRisks cell_risks(const CellProbs& cell);

LatentCounts compute_latent_counts(const ConditionalProbs& cond, const AgeGrid& grid);
SeverityRisks compute_risks(const ConditionalProbs& cond);

/// Coarse age bands b, each a set of fine bands A_{b,l}, declared per level.
class AgeAggregation {
 public:
  struct Band {
    std::string name;
    std::vector<std::size_t> members;  // fine-band indices
  };

  AgeAggregation() = default;
  explicit AgeAggregation(std::size_t n_fine) : n_fine_(n_fine) {}

  /// Identity mapping: one coarse band per fine band, at every level.
  static AgeAggregation identity(const AgeGrid& grid);

  /// Declares the bands for `level`, resolving member labels against `grid`.
  /// The bands must partition the fine bands; unknown labels, empty bands and
  /// overlaps raise ConfigError.
  void set_bands(SeverityLevel level, const AgeGrid& grid,
                 const std::vector<std::pair<std::string, std::vector<std::string>>>& bands);

  bool has_level(SeverityLevel level) const { return !bands_[static_cast<std::size_t>(level)].empty(); }
  const std::vector<Band>& bands(SeverityLevel level) const { return bands_[static_cast<std::size_t>(level)]; }
  const Band* find(SeverityLevel level, std::string_view name) const;

 private:
  std::size_t n_fine_ = 0;
  std::array<std::vector<Band>, 5> bands_;
};

/// N*_{w,b,l} = sum over a in A_{b,l} of N_{w,a,l}, in band order.
std::vector<std::pair<std::string, double>> aggregate_counts(const LatentCounts& counts,
                                                             const AgeAggregation& agg,
                                                             SeverityLevel level, int wave);

// --- template definitions ---

template <typename Cell>
std::size_t WaveAgeTable<Cell>::offset(int wave, std::size_t age) const {
  const auto w = wave_index(wave);
  if (!w || age >= n_ages_) throw std::out_of_range("wave/age cell out of range");
  return *w * n_ages_ + age;
}

}  // namespace sevsyn
