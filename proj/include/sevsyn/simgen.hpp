#pragma once

// Synthetic surveillance data drawn from known pyramid parameters.
//
// Latent counts are stochastic integers even though inference assumes the
// deterministic mean: N_Inf ~ Bin(pop, IAR), then each level is a binomial
// thinning of its parent, so N_l ~ Bin(pop, product of conditionals). Every
// observation is then drawn around the realized counts, except sero samples
// and conditional outcomes, which depend on parameters directly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sevsyn/likelihood.hpp"
#include "sevsyn/models.hpp"
#include "sevsyn/pyramid.hpp"
#include "sevsyn/report.hpp"
#include "sevsyn/symptomatic.hpp"

namespace sevsyn {

/// Which sources exist per wave. Log-scale items whose realized latent count
/// is 0 are not emitted, since their log is undefined.
struct EvidenceDesign {
  std::vector<int> sero_timepoints{0, 1, 2, 3};  // 0 is the baseline survey
  double sero_sample_size = 1000;
  std::vector<int> estimate_waves{1, 2};  // LogNormalEstimate of d_S N_S per age
  double estimate_sd_log = 0.1;
  std::vector<int> hospital_waves{1, 2, 3};  // DetectionCount of H per age
  std::vector<int> icu_waves{1, 2};          // DetectionCount of I per age
  std::vector<int> death_waves{1, 2, 3};     // DetectionCount of D per age
  std::vector<int> outcome_waves{1, 2, 3};   // ConditionalOutcome I and D among detected H
  std::vector<int> icu_logcount_waves{3};    // NormalLogCount of detected I per coarse I band
  double icu_logcount_sd = 0.1;
  std::vector<int> symptomatic_logcount_waves{3};  // NormalLogCount of N_S per age
  double symptomatic_logcount_sd = 0.1;
};

struct Scenario {
  Scenario(AgeGrid grid_, ConditionalProbs truth_, DetectionProbs detection_)
      : grid(std::move(grid_)), truth(std::move(truth_)), detection(std::move(detection_)) {}

  AgeGrid grid;
  ConditionalProbs truth;
  DetectionProbs detection;
  std::vector<double> baseline_prevalence;    // per age
  std::optional<AgeAggregation> aggregation;  // identity when unset
  EvidenceDesign design;
  std::uint64_t seed = 1;

  const std::vector<int>& waves() const { return truth.waves(); }
  /// Throws ConfigError for values out of range or design waves that are
  /// not in the scenario.
  void validate() const;
};

using TruthTable = std::vector<std::pair<std::string, double>>;

struct GeneratedData {
  std::vector<EvidenceItem> evidence;
  LatentCounts realized;
  /// Generating values under the model's quantity names, then the realized
  /// counts as realized.n_<level>.wW.aA.
  TruthTable truth;
};

GeneratedData generate(const Scenario& scenario);

/// Columns: quantity, value.
void write_truth(const std::filesystem::path& path, const TruthTable& truth);
TruthTable load_truth(const std::filesystem::path& path);

struct CoverageRow {
  std::string quantity;
  double truth = 0;
  double lo = 0;
  double hi = 0;
  bool covered = false;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;

  std::size_t covered() const;
  double rate() const;
};

/// Whether each truth value matching `patterns` lies in its closed 95%
/// interval. Throws ConfigError when a selected quantity is missing from the
/// posterior or nothing is selected.
CoverageReport recovery_report(const TruthTable& truth, const PosteriorSummary& posterior,
                               std::span<const std::string> patterns);

/// Seven standard bands of 10^5 people each, attack rates and severity
/// varying by age, one c_{S|Inf} for every cell (valid for all variants),
/// and a coarse three-band ICU aggregation when wave 3 is present.
Scenario desk_scenario(const std::vector<int>& waves, std::uint64_t seed);

/// Beta priors on every detection probability, centred on the scenario's
/// true value with sd = relative_sd * value.
PriorOverrides detection_priors(const Scenario& scenario, double relative_sd);

/// Sentinel series drawn from known regression coefficients:
/// ili ~ NegBin(denominator * rate, dispersion), swabs ~ Bin(ili, swab_fraction),
/// positives ~ Bin(swabs, pos).
struct SentinelScenario {
  std::vector<std::string> ages;
  std::vector<double> population;
  std::size_t weeks = 0;
  RegressionParams truth;  // includes propensity
  double denominator = 0;  // registered patients per (week, age) cell
  double swab_fraction = 0;
  std::uint64_t seed = 1;
};

struct SentinelData {
  SentinelSeries series;
  std::vector<double> log_n;  // generating log N_S per age
};

SentinelData generate_sentinel(const SentinelScenario& scenario);

/// Ten weeks on `grid`'s bands with an epidemic-shaped week effect.
SentinelScenario desk_sentinel(const AgeGrid& grid, std::uint64_t seed);

/// desk_sentinel with intercept and age effects set so the generating N_S
/// per age equals the scenario's expected wave-3 N_S.
SentinelScenario matched_sentinel(const Scenario& scenario, std::uint64_t seed);

}  // namespace sevsyn
