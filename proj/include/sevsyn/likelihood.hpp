#pragma once

// Observation models linking surveillance evidence to the latent pyramid.

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sevsyn/pyramid.hpp"
#include "sevsyn/special.hpp"

namespace sevsyn {

enum class EvidenceKind {
  DetectionCount,      // O ~ Bin(N_{w,b,l}, d_{w,b,l})
  SeroSample,          // positives ~ Bin(n, prevalence after wave w); wave 0 is baseline
  LogNormalEstimate,   // log estimate ~ N(log(d_S N_S), sd^2)
  NormalLogCount,      // mean_log ~ N(log N*_{w,b,l} (optionally thinned by d), sd^2)
  ConditionalOutcome,  // outcomes ~ Bin(parent, c_{l|H}), l in {I, D}
};

std::string_view to_string(EvidenceKind kind);
EvidenceKind parse_evidence_kind(std::string_view text);

struct EvidenceItem {
  EvidenceKind kind = EvidenceKind::DetectionCount;
  int wave = 1;
  std::string band;  // fine age label, or coarse band name for the item's level
  SeverityLevel level = SeverityLevel::H;
  double count = 0;         // observed count, positives or outcomes
  double sample_size = 0;   // SeroSample
  double parent_count = 0;  // ConditionalOutcome
  double mean_log = 0;      // LogNormalEstimate, NormalLogCount
  double sd_log = 0;
  bool detected = false;    // NormalLogCount: latent is thinned by the level's detection probability
  std::size_t line = 0;     // source line, 0 when not loaded from a file

  std::string label() const;
};

/// Sero-prevalence samples taken before and after a wave.
struct SeroLinkage {
  double baseline_positives = 0;
  double baseline_samples = 0;
  double post_positives = 0;
  double post_samples = 0;
};

/// Binomial log pmf generalized to a real-valued size N via log-Gamma.
/// Throws std::invalid_argument on negative inputs or d outside [0,1].
double loglik_detection(double observed, double latent, double d);

/// Baseline positives ~ Bin(n0, prev0) plus post-wave positives ~
/// Bin(n1, prev0 + iar). -inf when prev0 + iar > 1.
double loglik_sero(const SeroLinkage& sero, double baseline_prevalence, double iar);

/// Normal log density of a log-scale estimate around log(latent_observed).
/// -inf when latent_observed <= 0.
double loglik_lognormal_estimate(double estimate_mean_log, double sd_log, double latent_observed);

/// Normal log density of `mean_log` around log(latent). -inf when latent <= 0.
double loglik_normal_logcount(double mean_log, double sd_log, double latent);

/// Integer binomial log pmf of outcomes among observed parents.
double loglik_conditional_outcome(double outcomes, double parent, double c);

/// Detection probabilities: age-specific for S, age-constant for H, I, D.
class DetectionProbs {
 public:
  DetectionProbs() = default;
  DetectionProbs(std::vector<int> waves, std::size_t n_ages);

  double& symptomatic(int wave, std::size_t age) { return symptomatic_.at(wave, age); }
  double symptomatic(int wave, std::size_t age) const { return symptomatic_.at(wave, age); }
  /// level in {H, I, D}
  double& severe(int wave, SeverityLevel level);
  double severe(int wave, SeverityLevel level) const;
  /// Detection probability of `level` in the given fine age band.
  double at(int wave, std::size_t age, SeverityLevel level) const;

 private:
  WaveAgeTable<double> symptomatic_;
  WaveAgeTable<std::array<double, 3>> severe_;  // one "age" column
};

/// Natural-scale parameter values and the latent pyramid they imply.
struct PyramidState {
  ConditionalProbs cond;
  LatentCounts counts;
  DetectionProbs detection;
  /// Prevalence is referenced to the end of this wave: 0 (pre-pandemic
  /// baseline) for the one-stage models, 2 for the third-wave model.
  int reference_wave = 0;
  std::vector<double> reference_prevalence;

  /// Antibody prevalence after wave w: reference prevalence plus the attack
  /// rates of the modelled waves in (reference_wave, w].
  double prevalence(int wave, std::size_t age) const;
};

/// Fine age bands an evidence item refers to. Throws ConfigError for an
/// unknown band or a coarse band where the item's kind needs a fine one.
std::vector<std::size_t> resolve_band(const EvidenceItem& item, const AgeGrid& grid, const AgeAggregation& agg);

/// Hard validation of one item's payload and band. Throws DataError.
void validate_item(const EvidenceItem& item, const AgeGrid& grid, const AgeAggregation& agg,
                   const std::string& source = "evidence");

double item_loglik(const EvidenceItem& item, const PyramidState& state, const AgeGrid& grid,
                   const AgeAggregation& agg);

/// Log-likelihood of one item whose band resolves to fine bands `ages`,
/// reading the pyramid through `view`, which provides
///   count(w, a, level), detection(w, a, level), prevalence(w, a) and
///   conditional(w, a, level).
/// Values are read only as needed, so lazy views stay cheap.
template <typename View>
double evaluate_item(const EvidenceItem& item, std::span<const std::size_t> ages, const View& view);

/// Sum of item log-likelihoods; -inf as soon as any term is -inf.
double total_loglik(std::span<const EvidenceItem> evidence, const PyramidState& state, const AgeGrid& grid,
                    const AgeAggregation& agg);

// --- template definitions ---

template <typename View>
double evaluate_item(const EvidenceItem& item, std::span<const std::size_t> ages, const View& view) {
  const int w = item.wave;
  switch (item.kind) {
    case EvidenceKind::DetectionCount: {
      double latent = 0.0;
      for (auto a : ages) latent += view.count(w, a, item.level);
      return loglik_detection(item.count, latent, view.detection(w, ages.front(), item.level));
    }
    case EvidenceKind::SeroSample: {
      const double prev = view.prevalence(w, ages.front());
      if (!(prev <= 1.0)) return -std::numeric_limits<double>::infinity();
      return binomial_log_pmf(item.count, item.sample_size, prev);
    }
    case EvidenceKind::LogNormalEstimate: {
      const auto a = ages.front();
      const double latent = view.detection(w, a, SeverityLevel::S) * view.count(w, a, SeverityLevel::S);
      return loglik_lognormal_estimate(item.mean_log, item.sd_log, latent);
    }
    case EvidenceKind::NormalLogCount: {
      double latent = 0.0;
      for (auto a : ages) {
        const double d = item.detected ? view.detection(w, a, item.level) : 1.0;
        latent += d * view.count(w, a, item.level);
      }
      return loglik_normal_logcount(item.mean_log, item.sd_log, latent);
    }
    case EvidenceKind::ConditionalOutcome:
      return loglik_conditional_outcome(item.count, item.parent_count, view.conditional(w, ages.front(), item.level));
  }
  return -std::numeric_limits<double>::infinity();
}

}  // namespace sevsyn
