#pragma once

// Severity-model variants assembled into one posterior over the basic
// parameters.
//
//   A  waves 1-2. Per age: (IAR1, IAR2, remainder) ~ Dirichlet, baseline
//      prevalence pi_base, and c_{S|Inf}, c_{H|S}, c_{I|H}, c_{D|H} per wave.
//   B  wave 3 alone. Per age: (prevalence after wave 2, IAR3, remainder) ~
//      Dirichlet(2x/y, 1, 1) and Beta priors transferred from a fitted A.
//   C  waves 1-3. Per age: (IAR1, IAR2, IAR3, remainder) ~ Dirichlet; one
//      c_{S|Inf} shared by every wave and age; wave-3 c_{H|S}, c_{I|H},
//      c_{D|H} linked to wave 2 by logit c3 = logit c2 + tau * z, z ~ N(0,1),
//      tau ~ Unif[0,1], one tau per linked pair.
//
// Detection probabilities: d_S per wave and age, d_H, d_I, d_D per wave.
//
// Basic parameter names (ages 1-based):
//   iar.aA (simplex over iar.wW.aA and iar.rem.aA), prev.aA in B (over
//   prev.w2.aA, iar.w3.aA, iar.rem.aA), pi_base.aA, c_s_inf.wW.aA (c_s_inf
//   in C), c_h_s.wW.aA, c_i_h.wW.aA, c_d_h.wW.aA, z_h_s.aA, tau.h_s (and
//   likewise i_h, d_h), d_s.wW.aA, d_h.wW, d_i.wW, d_d.wW.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sevsyn/likelihood.hpp"
#include "sevsyn/priors.hpp"
#include "sevsyn/pyramid.hpp"
#include "sevsyn/report.hpp"
#include "sevsyn/sampler.hpp"

namespace sevsyn {

enum class Variant { A, B, C };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
std::vector<int> waves_of(Variant v);

/// Prior choices keyed by parameter path. A key applies to the parameter of
/// that name and to every parameter below it: "c_h_s" covers all c_h_s.*,
/// "c_h_s.w1" only wave 1. The longest matching key wins.
class PriorOverrides {
 public:
  void set(std::string key, PriorSpec prior);
  std::optional<PriorSpec> lookup(std::string_view name) const;
  const std::map<std::string, PriorSpec>& entries() const { return entries_; }
  /// Keys that match none of `names`.
  std::vector<std::string> unused(std::span<const std::string> names) const;

 private:
  std::map<std::string, PriorSpec> entries_;
};

/// Wave-3 pairs that may be linked to wave 2: "h_s", "i_h", "d_h".
inline const std::vector<std::string> kLinkablePairs = {"h_s", "i_h", "d_h"};

struct ModelSpec {
  ModelSpec(Variant variant_, AgeGrid grid_) : variant(variant_), grid(std::move(grid_)) {}

  Variant variant;
  AgeGrid grid;
  std::optional<AgeAggregation> aggregation;  // identity when unset
  std::vector<EvidenceItem> evidence;
  PriorOverrides priors;
  std::vector<std::string> linked_pairs = kLinkablePairs;  // variant C
  /// Reject prior keys that match no basic parameter. Callers sharing one
  /// override set across several models check the union themselves.
  bool strict_priors = true;
};

struct ManifestRow {
  std::string name;
  std::string transform;
  std::string prior;
  std::size_t dimension = 0;
};

class SeverityModel : public Target {
 public:
  /// Throws ConfigError naming unbound evidence, unknown prior keys, or a
  /// missing prior (variant B needs the transferred simplex prior).
  explicit SeverityModel(ModelSpec spec);

  Variant variant() const { return spec_.variant; }
  const std::vector<int>& waves() const { return waves_; }
  const AgeGrid& grid() const { return spec_.grid; }
  const AgeAggregation& aggregation() const { return agg_; }
  const std::vector<EvidenceItem>& evidence() const { return spec_.evidence; }
  const PriorSet& priors() const { return priors_; }
  /// Completeness notes (missing evidence shapes); not errors.
  const std::vector<std::string>& warnings() const { return warnings_; }

  PyramidState decode(std::span<const double> u) const;
  double log_prior(std::span<const double> u) const;
  double log_likelihood(std::span<const double> u) const;

  /// Functional parameters and basic parameters, in a fixed order.
  const std::vector<std::string>& quantity_names() const { return quantity_names_; }
  void quantities(std::span<const double> u, std::span<double> out) const;

  std::vector<ManifestRow> manifest() const;
  /// Basic-parameter symbols with their wave, age index dropped, sorted and
  /// unique (e.g. "c_h_s.w1", "d_h.w2", "iar.w1", "tau.h_s").
  std::vector<std::string> symbol_audit() const;

  std::size_t dimension() const override { return priors_.dimension(); }
  const std::vector<BlockInfo>& blocks() const override { return blocks_; }
  double log_density(std::span<const double> u) const override;
  double block_log_density(std::size_t block, std::span<const double> u) const override;
  /// Prior draw, then parameters feeding any -inf likelihood term are redrawn
  /// from their priors, a bounded number of times.
  void sample_initial(Rng& rng, std::span<double> u) const override;
  std::string explain_nonfinite(std::span<const double> u) const override;

  /// How a pyramid entry is read from the unconstrained vector.
  struct Ref {
    enum Kind { Scalar, SimplexComponent, Linked } kind = Scalar;
    std::size_t param = 0;      // Linked: the wave-2 parameter
    std::size_t component = 0;  // SimplexComponent
    std::size_t tau = 0;        // Linked
    std::size_t z = 0;          // Linked
  };

  // Lazy access used by the likelihood view. `touched` collects the indices
  // of basic parameters read, when non-null.
  double value(const Ref& ref, std::span<const double> u, std::vector<std::size_t>* touched) const;
  const Ref& cell_ref(std::size_t wave_index, std::size_t age, std::size_t slot) const;
  const Ref& severe_detection_ref(std::size_t wave_index, SeverityLevel level) const;
  const Ref& reference_prevalence_ref(std::size_t age) const;
  std::size_t wave_index(int wave) const;
  int reference_wave() const { return spec_.variant == Variant::B ? 2 : 0; }

 private:
  struct Factor {
    std::size_t item;
    std::vector<std::size_t> ages;
    std::vector<std::size_t> params;  // basic parameters read
  };

  double factor_loglik(const Factor& f, std::span<const double> u, std::vector<std::size_t>* touched) const;
  std::size_t add_basic(const std::string& name, std::optional<PriorSpec> fallback,
                        std::vector<std::string> components = {});
  void bind_evidence();
  void check_completeness();
  void build_quantity_names();

  ModelSpec spec_;
  std::vector<int> waves_;
  AgeAggregation agg_;
  PriorSet priors_;
  std::vector<std::string> warnings_;

  // refs_[wave_index][age][slot]: slots iar, c_s, c_h, c_i, c_d, d_s
  std::vector<std::vector<std::array<Ref, 6>>> cell_refs_;
  std::vector<std::array<Ref, 3>> severe_refs_;  // per wave: d_h, d_i, d_d
  std::vector<Ref> reference_refs_;              // per age

  std::vector<Factor> factors_;
  std::vector<BlockInfo> blocks_;
  std::vector<std::size_t> block_param_;
  std::vector<std::vector<std::size_t>> block_factors_;
  std::vector<std::string> quantity_names_;
  std::vector<std::size_t> extra_components_;  // natural-vector indices of basic components not among the functionals
};

/// Names of the functional parameters computed by functional_values, in
/// order: per (wave, age) cell, per-wave all-ages aggregates (ratios of
/// summed counts), then per-wave age-constant detection probabilities.
std::vector<std::string> functional_names(std::span<const int> waves, std::size_t n_ages);
void functional_values(const PyramidState& state, const AgeGrid& grid, std::span<double> out);

/// Third-wave logit from the wave-2 logit: second + tau * innovation.
double link_third_wave(double second_logit, double tau, double innovation);

/// Central interval of the odds ratio c3-odds / c2-odds implied by tau:
/// (exp(-z tau), exp(z tau)) with z the standard-normal quantile.
std::pair<double, double> odds_ratio_interval(double tau, double level = 0.95);

struct TransferEntry {
  std::string parameter;  // variant-B basic parameter
  PriorSpec prior;
  std::string source;     // stage-1 quantity
  double stage1_mean = 0;
  double stage1_sd = 0;
  double induced_mean = 0;  // prior mean of the first component (prevalence) or of the Beta
};

struct TransferPriors {
  std::vector<TransferEntry> entries;

  PriorOverrides overrides() const;
};

/// Moment-matched variant-B priors from a variant-A posterior summary: per
/// age, prev.w2 -> Beta(x, y) -> Dirichlet(2x/y, 1, 1) for prev.aA, and the
/// wave-2 c_s_inf, c_h_s, c_i_h, c_d_h -> Beta priors for their wave-3
/// counterparts. Errors name the age band and quantity.
TransferPriors two_stage_transfer(const PosteriorSummary& stage1, const AgeGrid& grid);

/// Columns: parameter, prior, source, stage1_mean, stage1_sd, induced_mean.
void write_transfer(const std::filesystem::path& path, const TransferPriors& transfer);
TransferPriors load_transfer(const std::filesystem::path& path);

/// Runs the sampler and evaluates the quantities matching `monitor`
/// (wildcard patterns) at every retained draw.
struct FitResult {
  RunResult run;
  DrawTable draws;
};
std::vector<std::string> select_quantities(const SeverityModel& model, std::span<const std::string> monitor);
DrawTable functional_report(const SeverityModel& model, const RunResult& run, std::span<const std::string> names);
FitResult fit(const SeverityModel& model, const RunProtocol& protocol, std::span<const std::uint64_t> seeds,
              std::span<const std::string> monitor);

}  // namespace sevsyn
