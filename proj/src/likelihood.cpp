#include "sevsyn/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "sevsyn/errors.hpp"
#include "sevsyn/special.hpp"

namespace sevsyn {

std::string_view to_string(EvidenceKind kind) {
  switch (kind) {
    case EvidenceKind::DetectionCount: return "DetectionCount";
    case EvidenceKind::SeroSample: return "SeroSample";
    case EvidenceKind::LogNormalEstimate: return "LogNormalEstimate";
    case EvidenceKind::NormalLogCount: return "NormalLogCount";
    case EvidenceKind::ConditionalOutcome: return "ConditionalOutcome";
  }
  return "?";
}

EvidenceKind parse_evidence_kind(std::string_view text) {
  for (auto kind : {EvidenceKind::DetectionCount, EvidenceKind::SeroSample, EvidenceKind::LogNormalEstimate,
                    EvidenceKind::NormalLogCount, EvidenceKind::ConditionalOutcome})
    if (to_string(kind) == text) return kind;
  throw ConfigError("unknown evidence kind '" + std::string(text) + "'");
}

std::string EvidenceItem::label() const {
  std::string s;
  if (line) s = "line " + std::to_string(line) + " ";
  return s + "(" + std::string(to_string(kind)) + " wave " + std::to_string(wave) + " band " + band + " level " +
         std::string(to_string(level)) + ")";
}

double loglik_detection(double observed, double latent, double d) {
  if (observed < 0 || latent < 0) throw std::invalid_argument("loglik_detection: negative count");
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("loglik_detection: probability outside [0,1]");
  return binomial_log_pmf(observed, latent, d);
}

double loglik_sero(const SeroLinkage& sero, double baseline_prevalence, double iar) {
  const double post = baseline_prevalence + iar;
  if (!(post <= 1.0)) return kNegInf;
  return binomial_log_pmf(sero.baseline_positives, sero.baseline_samples, baseline_prevalence) +
         binomial_log_pmf(sero.post_positives, sero.post_samples, post);
}

double loglik_lognormal_estimate(double estimate_mean_log, double sd_log, double latent_observed) {
  if (!(latent_observed > 0.0)) return kNegInf;
  return normal_log_pdf(estimate_mean_log, std::log(latent_observed), sd_log);
}

double loglik_normal_logcount(double mean_log, double sd_log, double latent) {
  if (!(latent > 0.0)) return kNegInf;
  return normal_log_pdf(mean_log, std::log(latent), sd_log);
}

double loglik_conditional_outcome(double outcomes, double parent, double c) {
  return binomial_log_pmf(outcomes, parent, c);
}

DetectionProbs::DetectionProbs(std::vector<int> waves, std::size_t n_ages)
    : symptomatic_(waves, n_ages), severe_(std::move(waves), 1) {}

double& DetectionProbs::severe(int wave, SeverityLevel level) {
  const auto i = static_cast<std::size_t>(level) - 2;
  if (i > 2) throw std::invalid_argument("age-constant detection exists for H, I and D only");
  return severe_.at(wave, 0)[i];
}

double DetectionProbs::severe(int wave, SeverityLevel level) const {
  const auto i = static_cast<std::size_t>(level) - 2;
  if (i > 2) throw std::invalid_argument("age-constant detection exists for H, I and D only");
  return severe_.at(wave, 0)[i];
}

double DetectionProbs::at(int wave, std::size_t age, SeverityLevel level) const {
  if (level == SeverityLevel::S) return symptomatic(wave, age);
  if (level == SeverityLevel::Inf) throw std::invalid_argument("no detection probability for level Inf");
  return severe(wave, level);
}

double PyramidState::prevalence(int wave, std::size_t age) const {
  if (wave < reference_wave) throw std::out_of_range("prevalence requested before the reference wave");
  double p = reference_prevalence.at(age);
  for (int w : cond.waves())
    if (w > reference_wave && w <= wave) p += cond.at(w, age).iar;
  return p;
}

namespace {

bool needs_fine_band(const EvidenceItem& item) {
  switch (item.kind) {
    case EvidenceKind::SeroSample:
    case EvidenceKind::LogNormalEstimate:
    case EvidenceKind::ConditionalOutcome: return true;
    case EvidenceKind::DetectionCount: return item.level == SeverityLevel::S;
    case EvidenceKind::NormalLogCount: return item.level == SeverityLevel::S && item.detected;
  }
  return true;
}

bool integral(double v) { return std::floor(v) == v; }

}  // namespace

std::vector<std::size_t> resolve_band(const EvidenceItem& item, const AgeGrid& grid, const AgeAggregation& agg) {
  if (const auto a = grid.index_of(item.band)) return {*a};
  if (!needs_fine_band(item))
    if (const auto* band = agg.find(item.level, item.band)) return band->members;
  if (needs_fine_band(item))
    throw ConfigError(item.label() + ": band '" + item.band + "' is not a fine age band, which this evidence needs");
  throw ConfigError(item.label() + ": unknown band '" + item.band + "' for level " +
                    std::string(to_string(item.level)));
}

void validate_item(const EvidenceItem& item, const AgeGrid& grid, const AgeAggregation& agg,
                   const std::string& source) {
  auto fail = [&](const std::string& what) { throw DataError(source, item.line, item.label() + ": " + what); };
  auto require_count = [&](double v, const char* name) {
    if (!(v >= 0.0) || !integral(v)) fail(std::string(name) + " must be a nonnegative integer");
  };
  auto require_sd = [&] {
    if (!(item.sd_log > 0.0) || !std::isfinite(item.sd_log)) fail("sd_log must be > 0");
    if (!std::isfinite(item.mean_log)) fail("mean_log must be finite");
  };
  const bool baseline_ok = item.kind == EvidenceKind::SeroSample;
  if (item.wave < (baseline_ok ? 0 : 1)) fail("wave must be >= " + std::string(baseline_ok ? "0" : "1"));

  switch (item.kind) {
    case EvidenceKind::DetectionCount:
      if (item.level == SeverityLevel::Inf) fail("detection counts are not defined for level Inf");
      require_count(item.count, "count");
      break;
    case EvidenceKind::SeroSample:
      if (item.level != SeverityLevel::Inf) fail("sero samples must have level Inf");
      require_count(item.count, "count");
      require_count(item.sample_size, "sample_size");
      if (item.count > item.sample_size) fail("positives exceed sample_size");
      break;
    case EvidenceKind::LogNormalEstimate:
      if (item.level != SeverityLevel::S) fail("log-normal estimates inform level S only");
      require_sd();
      break;
    case EvidenceKind::NormalLogCount:
      if (item.level == SeverityLevel::Inf && item.detected) fail("level Inf has no detection probability");
      require_sd();
      break;
    case EvidenceKind::ConditionalOutcome:
      if (item.level != SeverityLevel::I && item.level != SeverityLevel::D)
        fail("conditional outcomes must have level I or D");
      require_count(item.count, "count");
      require_count(item.parent_count, "parent_count");
      if (item.count > item.parent_count) fail("outcomes exceed parent_count");
      break;
  }
  try {
    resolve_band(item, grid, agg);
  } catch (const ConfigError& e) {
    throw DataError(source, item.line, e.what());
  }
}

namespace {

struct StateView {
  const PyramidState& s;
  double count(int w, std::size_t a, SeverityLevel l) const { return s.counts.at(w, a, l); }
  double detection(int w, std::size_t a, SeverityLevel l) const { return s.detection.at(w, a, l); }
  double prevalence(int w, std::size_t a) const { return s.prevalence(w, a); }
  double conditional(int w, std::size_t a, SeverityLevel l) const { return s.cond.at(w, a).conditional(l); }
};

}  // namespace

double item_loglik(const EvidenceItem& item, const PyramidState& state, const AgeGrid& grid,
                   const AgeAggregation& agg) {
  const auto ages = resolve_band(item, grid, agg);
  return evaluate_item(item, ages, StateView{state});
}

double total_loglik(std::span<const EvidenceItem> evidence, const PyramidState& state, const AgeGrid& grid,
                    const AgeAggregation& agg) {
  double total = 0.0;
  for (const auto& item : evidence) {
    const double term = item_loglik(item, state, grid, agg);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

}  // namespace sevsyn
