#pragma once

// Posterior summaries, cross-wave comparisons and plot-ready tables computed
// from retained draws of named quantities.
//
// Quantity names follow `symbol[.wW][.aA|.all]`: `cfr.w2.a3` is the wave-2
// case-fatality risk in the third age band (1-based), `cfr.w2.all` its
// all-ages counterpart, `d_h.w1` a per-wave parameter, `tau.h_s` a global one.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sevsyn {

struct QuantityName {
  std::string symbol;
  std::optional<int> wave;
  std::optional<std::size_t> age;  // 0-based
  bool all_ages = false;
};

QuantityName parse_quantity_name(std::string_view name);
std::string quantity_name(std::string_view symbol, std::optional<int> wave, std::optional<std::size_t> age);
std::string quantity_name_all(std::string_view symbol, int wave);

/// Draws of named quantities, one row-major matrix per chain.
struct DrawTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> chains;

  std::size_t n_quantities() const { return names.size(); }
  std::size_t draws_per_chain() const;
  std::size_t total_draws() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  double at(std::size_t chain, std::size_t draw, std::size_t q) const {
    return chains[chain][draw * names.size() + q];
  }
  /// Per-chain series of quantity q.
  std::vector<std::vector<double>> series(std::size_t q) const;
  std::vector<double> pooled(std::size_t q) const;
};

/// Type-7 (linear interpolation between order statistics) quantile of
/// sorted data: h = (n - 1) p, interpolating x[floor h] and x[floor h + 1].
double quantile_type7(std::span<const double> sorted, double p);

struct SummaryRow {
  std::string quantity;
  double mean = 0;
  double sd = 0;
  double median = 0;
  double lo = 0;  // 2.5%
  double hi = 0;  // 97.5%
  double rhat = 1;
  double ess = 0;
  bool rhat_degenerate = false;
};

struct PosteriorSummary {
  std::vector<SummaryRow> rows;

  const SummaryRow* find(std::string_view quantity) const;
  const SummaryRow& require(std::string_view quantity) const;
};

/// Summary of every quantity. R-hat and ESS are NaN when chains hold fewer
/// than 10 draws.
PosteriorSummary summarize(const DrawTable& draws);

/// Columns: quantity, mean, sd, median, q2.5, q97.5, rhat, ess.
void write_summary(const std::filesystem::path& path, const PosteriorSummary& summary);
PosteriorSummary load_summary(const std::filesystem::path& path);

struct ComparePair {
  std::string symbol;
  int wave_from = 1;
  int wave_to = 2;
};

/// Parses "symbol:from:to", e.g. "cfr:1:2".
ComparePair parse_compare_pair(std::string_view text);

struct CompareRow {
  std::string symbol;
  int wave_from = 0;
  int wave_to = 0;
  std::string age;  // age label or "All ages"
  double probability = 0;
};

/// Pr(q_to > q_from) per age band and for all ages, as the fraction of
/// retained draws with strict inequality (ties count as not greater).
/// Throws ConfigError when a needed quantity is not in the table.
std::vector<CompareRow> compare_waves(const DrawTable& draws, std::span<const ComparePair> pairs,
                                      std::span<const std::string> age_labels);

/// Columns: quantity, wave_from, wave_to, age, probability.
void write_compare(const std::filesystem::path& path, std::span<const CompareRow> rows);

/// One long-format file per symbol in `dir`: quantity, age, wave, median, lo, hi.
/// Only wave/age-indexed quantities are written.
void write_plotdata(const std::filesystem::path& dir, const PosteriorSummary& summary,
                    std::span<const std::string> age_labels);

}  // namespace sevsyn
