#pragma once

// Third-wave symptomatic submodel: sentinel consultation counts and swab
// positivity regressed jointly on week and age, summarized as the posterior
// mean and sd of log N_S per age band.
//
//   ili_count[t,a]     ~ NegBin(mean = denominator[t,a] * rate[t,a], size = dispersion)
//   log rate[t,a]      = b0 + b_week[t] + b_age[a] (+ b_int[t,a])
//   swab_positive[t,a] ~ Bin(swab_total[t,a], pos[t,a])
//   logit pos[t,a]     = g0 + g_week[t] + g_age[a] (+ g_int[t,a])
//   N_S[a]             = sum_t rate[t,a] * pos[t,a] * population[a] / propensity[a]
//
// The first week and first age band are the reference levels.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sevsyn/csv.hpp"
#include "sevsyn/priors.hpp"
#include "sevsyn/pyramid.hpp"
#include "sevsyn/sampler.hpp"

namespace sevsyn {

struct SwabGroup {
  double total = 0;
  double positive = 0;
  std::optional<double> delay_days;
};

struct SentinelCell {
  double ili_count = 0;
  double denominator = 0;
  std::vector<SwabGroup> swabs;

  double swab_total() const;
  double swab_positive() const;
};

/// Weekly sentinel data on a (week, age band) grid.
class SentinelSeries {
 public:
  SentinelSeries() = default;
  SentinelSeries(std::vector<int> weeks, std::vector<std::string> ages);

  const std::vector<int>& weeks() const { return weeks_; }
  const std::vector<std::string>& ages() const { return ages_; }
  std::size_t n_weeks() const { return weeks_.size(); }
  std::size_t n_ages() const { return ages_.size(); }
  SentinelCell& cell(std::size_t t, std::size_t a) { return cells_.at(t * ages_.size() + a); }
  const SentinelCell& cell(std::size_t t, std::size_t a) const { return cells_.at(t * ages_.size() + a); }

  /// True when every swab group carries a collection delay.
  bool has_delays() const;
  /// Throws DataError unless denominators are positive and positives do not
  /// exceed totals.
  void validate() const;

 private:
  std::vector<int> weeks_;
  std::vector<std::string> ages_;
  std::vector<SentinelCell> cells_;
};

/// Columns: week, age_band, ili_count, denominator, swab_total,
/// swab_positive, optional swab_delay_days. Several rows may share a
/// (week, age_band) when swabs are split by delay; they must then repeat the
/// same ili_count and denominator. Every (week, age_band) pair must appear.
SentinelSeries parse_sentinel(const CsvTable& table);
SentinelSeries load_sentinel(const std::filesystem::path& path);
void write_sentinel(const std::filesystem::path& path, const SentinelSeries& series);

/// Keeps swabs collected within `max_days` of consultation. An infinite
/// bound returns the series unchanged; otherwise every swab group must carry
/// a delay (ConfigError if not).
SentinelSeries restrict_positivity(const SentinelSeries& series, double max_days);

/// Natural-scale regression parameters. Week and age vectors include the
/// reference level, whose entry is 0.
struct RegressionParams {
  double rate_intercept = 0;
  std::vector<double> rate_week;
  std::vector<double> rate_age;
  std::vector<double> rate_interaction;  // weeks x ages, row-major; empty when absent
  double pos_intercept = 0;
  std::vector<double> pos_week;
  std::vector<double> pos_age;
  std::vector<double> pos_interaction;
  double dispersion = 1;
  std::vector<double> propensity;  // per age

  double rate(std::size_t t, std::size_t a) const;
  double positivity(std::size_t t, std::size_t a) const;
};

double loglik_consultations(const SentinelSeries& series, const RegressionParams& params);
double loglik_positivity(const SentinelSeries& series, const RegressionParams& params);

/// Per-age log N_S = log(sum_t rate * pos) + log(population) - log(propensity).
std::vector<double> log_symptomatic(const SentinelSeries& series, const RegressionParams& params,
                                    std::span<const double> population);

struct SymptomaticPriors {
  PriorSpec rate_intercept = NormalSpec{0, 10};
  PriorSpec rate_effect = NormalSpec{0, 5};
  PriorSpec pos_intercept = NormalSpec{0, 5};
  PriorSpec pos_effect = NormalSpec{0, 5};
  PriorSpec dispersion = LogNormalSpec{2, 2};
  /// One per sentinel age band; a FixedSpec holds the propensity constant.
  std::vector<PriorSpec> propensity;
  bool interaction = false;
};

/// Posterior of the regression as a sampler target. Blocks: the rate
/// coefficients jointly, the dispersion, the positivity coefficients
/// jointly, and one per non-fixed propensity.
class SymptomaticModel : public Target {
 public:
  SymptomaticModel(SentinelSeries series, SymptomaticPriors priors);

  const SentinelSeries& series() const { return series_; }
  const PriorSet& priors() const { return priors_; }
  RegressionParams decode(std::span<const double> u) const;

  std::size_t dimension() const override { return priors_.dimension(); }
  const std::vector<BlockInfo>& blocks() const override { return blocks_; }
  double log_density(std::span<const double> u) const override;
  double block_log_density(std::size_t block, std::span<const double> u) const override;
  void sample_initial(Rng& rng, std::span<double> u) const override;

 private:
  enum class BlockKind { Rate, Dispersion, Positivity, Propensity };

  double prior_range(std::size_t first, std::size_t last, std::span<const double> u) const;

  SentinelSeries series_;
  PriorSet priors_;
  bool interaction_ = false;
  std::vector<BlockInfo> blocks_;
  std::vector<BlockKind> block_kinds_;
  std::vector<std::pair<std::size_t, std::size_t>> block_params_;  // [first, last) parameter indices
  std::size_t rate_first_ = 0, pos_first_ = 0, dispersion_ = 0, propensity_first_ = 0;
};

struct SymptomaticSummaryRow {
  std::string age_band;
  double mean_log = 0;
  double sd_log = 0;
  double mcse = 0;          // Monte Carlo standard error of mean_log
  bool degenerate = false;  // sd_log was 0 and replaced by the floor
};

inline constexpr double kSdLogFloor = 1e-6;

struct SymptomaticFit {
  std::vector<SymptomaticSummaryRow> summary;
  RunResult run;
  /// Per chain, per retained draw, log N_S for every sentinel age band.
  std::vector<std::vector<double>> log_n;
};

/// Fits the regression and summarizes log N_S per sentinel age band. Sentinel
/// bands must exist in `grid`, which supplies populations. A series with no
/// consultations or no positive swabs raises DataError.
SymptomaticFit estimate_symptomatic(const SentinelSeries& series, const SymptomaticPriors& priors,
                                    const AgeGrid& grid, const RunProtocol& protocol,
                                    std::span<const std::uint64_t> seeds);

/// Columns: age_band, mean_log, sd_log.
void write_symptomatic_summary(const std::filesystem::path& path, std::span<const SymptomaticSummaryRow> rows);
std::vector<SymptomaticSummaryRow> load_symptomatic_summary(const std::filesystem::path& path);

}  // namespace sevsyn
