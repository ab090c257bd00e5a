#include <doctest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "sevsyn/errors.hpp"
#include "sevsyn/likelihood.hpp"
#include "sevsyn/simgen.hpp"
#include "sevsyn/special.hpp"

using namespace sevsyn;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double binom_oracle(unsigned k, unsigned n, double p) {
  return std::log(boost::math::pdf(boost::math::binomial_distribution<>(n, p), k));
}

// Straight-line log-likelihood of one item, independent of evaluate_item.
double oracle_item(const EvidenceItem& item, const PyramidState& st, const AgeGrid& grid, const AgeAggregation& agg) {
  std::vector<std::size_t> ages;
  if (auto a = grid.index_of(item.band)) ages = {*a};
  else ages = agg.find(item.level, item.band)->members;
  const int w = item.wave;
  auto lchoose = [](double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); };
  auto lbin = [&](double k, double n, double p) {
    if (k > n) return -kInf;
    return lchoose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
  };
  auto lnorm = [](double x, double m, double s) {
    return -0.5 * std::log(2 * M_PI) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
  };
  switch (item.kind) {
    case EvidenceKind::DetectionCount: {
      double n = 0;
      for (auto a : ages) n += st.counts.at(w, a, item.level);
      return lbin(item.count, n, st.detection.at(w, ages[0], item.level));
    }
    case EvidenceKind::SeroSample: {
      const auto a = ages[0];
      double prev = st.reference_prevalence[a];
      for (int v : st.cond.waves())
        if (v <= w) prev += st.cond.at(v, a).iar;
      return lbin(item.count, item.sample_size, prev);
    }
    case EvidenceKind::LogNormalEstimate: {
      const auto a = ages[0];
      return lnorm(item.mean_log, std::log(st.detection.symptomatic(w, a) * st.counts.at(w, a, SeverityLevel::S)),
                   item.sd_log);
    }
    case EvidenceKind::NormalLogCount: {
      double n = 0;
      for (auto a : ages) n += (item.detected ? st.detection.at(w, a, item.level) : 1.0) * st.counts.at(w, a, item.level);
      return lnorm(item.mean_log, std::log(n), item.sd_log);
    }
    case EvidenceKind::ConditionalOutcome:
      return lbin(item.count, item.parent_count, st.cond.at(w, ages[0]).conditional(item.level));
  }
  return std::nan("");
}

}  // namespace

TEST_CASE("generalized binomial detection") {
  CHECK(loglik_detection(0, 0, 0) == 0.0);
  CHECK(loglik_detection(50, 100, 0.5) == doctest::Approx(binom_oracle(50, 100, 0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(loglik_detection(1, 2, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(loglik_detection(-1, 2, 0.5), std::invalid_argument);

  // Real-valued size: unimodal in d with its mode at O / N.
  double best = -kInf, arg = 0;
  double prev = -kInf;
  bool rising = true, unimodal = true;
  for (int i = 1; i < 1000; ++i) {
    const double d = i / 1000.0;
    const double v = loglik_detection(5, 7.5, d);
    REQUIRE(std::isfinite(v));
    if (v > best) best = v, arg = d;
    if (rising && v < prev) rising = false;
    else if (!rising && v > prev) unimodal = false;
    prev = v;
  }
  CHECK(unimodal);
  CHECK(arg == doctest::Approx(5 / 7.5).epsilon(0.01 / (5 / 7.5)));
}

TEST_CASE("generalized binomial equals the integer pmf exhaustively") {
  double worst = 0;
  for (unsigned n = 0; n <= 30; ++n)
    for (unsigned o = 0; o <= n; ++o)
      for (int k = 1; k <= 9; ++k) {
        const double d = k / 10.0;
        worst = std::max(worst, std::abs(loglik_detection(o, n, d) - binom_oracle(o, n, d)));
      }
  CHECK(worst <= 1e-10);
}

TEST_CASE("sero linkage") {
  SeroLinkage s{10, 100, 30, 100};
  CHECK(loglik_sero(s, 0.1, 0.2) ==
        doctest::Approx(binom_oracle(10, 100, 0.1) + binom_oracle(30, 100, 0.3)).epsilon(1e-12));
  CHECK(loglik_sero(s, 0.9, 0.2) == -kInf);
  SeroLinkage same{12, 100, 12, 100};
  CHECK(loglik_sero(same, 0.15, 0.0) == doctest::Approx(2 * binom_oracle(12, 100, 0.15)).epsilon(1e-12));
}

TEST_CASE("log-scale evidence") {
  const double mode = -std::log(0.5 * std::sqrt(2 * M_PI));
  CHECK(loglik_lognormal_estimate(std::log(1000), 0.5, 1000) == doctest::Approx(mode).epsilon(1e-14));
  CHECK(mode == doctest::Approx(-0.2258).epsilon(1e-3));
  CHECK(loglik_lognormal_estimate(std::log(1000) + 1.0, 0.5, 1000) == doctest::Approx(mode - 2.0).epsilon(1e-13));
  CHECK(loglik_lognormal_estimate(1.0, 0.5, 0) == -kInf);
  CHECK(loglik_normal_logcount(std::log(500), 0.1, 500) == doctest::Approx(1.3836).epsilon(1e-4));
  const boost::math::normal_distribution<> nd(std::log(300.0), 0.2);
  CHECK(loglik_normal_logcount(5.5, 0.2, 300) == doctest::Approx(std::log(boost::math::pdf(nd, 5.5))).epsilon(1e-12));
}

TEST_CASE("conditional outcomes") {
  CHECK(loglik_conditional_outcome(0, 0, 0.4) == 0.0);
  CHECK(loglik_conditional_outcome(3, 10, 0.3) == doctest::Approx(-1.3212).epsilon(1e-4));
  CHECK(loglik_conditional_outcome(3, 10, 0.3) == doctest::Approx(binom_oracle(3, 10, 0.3)).epsilon(1e-12));
  CHECK(loglik_conditional_outcome(3, 10, 1.0) == -kInf);
}

TEST_CASE("special functions against Boost") {
  const double size = 2, mean = 3;
  const boost::math::negative_binomial_distribution<> nb(size, size / (size + mean));
  CHECK(neg_binomial_log_pmf(3, mean, size) == doctest::Approx(std::log(boost::math::pdf(nb, 3))).epsilon(1e-10));
  CHECK(std::abs(neg_binomial_log_pmf(5, 5, 1e6) - poisson_log_pmf(5, 5)) < 1e-3);
  CHECK(neg_binomial_log_pmf(0, 1e-9, 5) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(binomial_log_pmf(1, 2, 0.5) == doctest::Approx(-0.6931).epsilon(1e-4));
  CHECK(binomial_log_pmf(0, 0, 0.5) == 0.0);
  CHECK(binomial_log_pmf(20, 20, 1 - 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
}

TEST_CASE("total log-likelihood") {
  const auto sc = desk_scenario({1, 2, 3}, 7);
  const auto data = generate(sc);
  PyramidState st;
  st.cond = sc.truth;
  st.counts = data.realized;  // observed counts never exceed these
  st.detection = sc.detection;
  st.reference_wave = 0;
  st.reference_prevalence = sc.baseline_prevalence;
  const auto agg = *sc.aggregation;

  CHECK(total_loglik({}, st, sc.grid, agg) == 0.0);

  double oracle = 0, sum = 0;
  for (const auto& item : data.evidence) {
    const double v = item_loglik(item, st, sc.grid, agg);
    CHECK(v == doctest::Approx(oracle_item(item, st, sc.grid, agg)).epsilon(1e-9));
    oracle += oracle_item(item, st, sc.grid, agg);
    sum += v;
  }
  const double total = total_loglik(data.evidence, st, sc.grid, agg);
  CHECK(std::abs(total - oracle) <= 1e-9 * std::abs(oracle));

  const std::vector<EvidenceItem> two(data.evidence.begin(), data.evidence.begin() + 2);
  CHECK(total_loglik(two, st, sc.grid, agg) ==
        item_loglik(two[0], st, sc.grid, agg) + item_loglik(two[1], st, sc.grid, agg));
}

TEST_CASE("item validation") {
  const auto grid = AgeGrid::standard(std::vector<double>(7, 1000));
  const auto agg = AgeAggregation::identity(grid);
  EvidenceItem item;
  item.kind = EvidenceKind::DetectionCount;
  item.band = "65+";
  item.count = 4;
  CHECK_NOTHROW(validate_item(item, grid, agg));
  item.count = -1;
  CHECK_THROWS_AS(validate_item(item, grid, agg), DataError);
  item.count = 4;
  item.band = "70+";
  CHECK_THROWS(validate_item(item, grid, agg));
  for (auto k : {EvidenceKind::DetectionCount, EvidenceKind::SeroSample, EvidenceKind::LogNormalEstimate,
                 EvidenceKind::NormalLogCount, EvidenceKind::ConditionalOutcome})
    CHECK(parse_evidence_kind(to_string(k)) == k);
}
