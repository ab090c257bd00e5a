#include <doctest.h>

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "sevsyn/diagnostics.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/random.hpp"
#include "sevsyn/report.hpp"
#include "sevsyn/sampler.hpp"
#include "support.hpp"

using namespace sevsyn;
using sevsyn::testing::BetaBinomialTarget;
using sevsyn::testing::NormalTarget;

namespace {

class ImpossibleTarget : public NormalTarget {
 public:
  ImpossibleTarget() : NormalTarget({0}, {1}) {}
  double log_density(std::span<const double>) const override { return -std::numeric_limits<double>::infinity(); }
  std::string explain_nonfinite(std::span<const double>) const override { return "item 7: 12 observed > latent 3"; }
};

}  // namespace

TEST_CASE("protocol arithmetic") {
  CHECK(RunProtocol{}.retained_draws() == 450000);
  RunProtocol p;
  p.n_chains = 2;
  p.n_iterations = 1000;
  p.burn_in = 500;
  p.thin = 5;
  CHECK(p.retained_draws() == 200);
  CHECK(RunProtocol::desk().retained_draws() == 30000);
  p.burn_in = 1000;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("seeds") {
  const auto a = derive_seeds(42, 5);
  const auto b = derive_seeds(42, 3);
  CHECK(std::equal(b.begin(), b.end(), a.begin()));
  CHECK(std::set<std::uint64_t>(a.begin(), a.end()).size() == 5);
  Rng x(9), y(9);
  for (int i = 0; i < 100; ++i) CHECK(x() == y());
}

TEST_CASE("tiny proposal scale accepts nearly everything") {
  NormalTarget target({0}, {1});
  auto st = initialize(target, 5);
  const double start = st.position[0];
  st.blocks[0].log_scale = -20;
  for (int i = 0; i < 1000; ++i) step(st, target);
  CHECK(st.blocks[0].window_accepts >= 995);
  CHECK(std::abs(st.position[0] - start) < 1e-5);
}

TEST_CASE("standard-normal acceptance at scale 2.4") {
  NormalTarget target({0}, {1});
  auto st = initialize(target, 17);
  st.blocks[0].log_scale = std::log(2.4);
  for (int i = 0; i < 100000; ++i) step(st, target);
  const double rate = double(st.blocks[0].window_accepts) / double(st.blocks[0].window_proposals);
  CHECK(rate >= 0.3);
  CHECK(rate <= 0.6);
  CHECK(cache_error(st, target) < 1e-12);
}

TEST_CASE("adaptation direction and freeze") {
  NormalTarget target({0}, {1});
  auto st = initialize(target, 1);
  auto& ad = st.blocks[0];
  const double s0 = ad.log_scale;
  ad.window_accepts = 50;
  ad.window_proposals = 50;
  adapt(st, 100);
  CHECK(ad.log_scale > s0);
  const double s1 = ad.log_scale;
  ad.window_accepts = 0;
  ad.window_proposals = 50;
  adapt(st, 100);
  CHECK(ad.log_scale < s1);
  const double s2 = ad.log_scale;
  st.iteration = 101;
  ad.window_accepts = 50;
  ad.window_proposals = 50;
  adapt(st, 100);
  CHECK(ad.log_scale == s2);
}

TEST_CASE("identical seeds give identical trajectories") {
  NormalTarget target({1, -2}, {0.5, 3});
  RunProtocol p;
  p.n_chains = 1;
  p.n_iterations = 2000;
  p.burn_in = 500;
  p.thin = 3;
  const auto a = run_chain(target, p, 99);
  const auto b = run_chain(target, p, 99);
  CHECK(a.draws == b.draws);
  CHECK(a.final_scales == b.final_scales);
  const auto c = run_chain(target, p, 100);
  CHECK(a.draws != c.draws);
  CHECK(a.retained == p.retained_per_chain());

  p.parallel = true;
  const std::vector<std::uint64_t> seeds{3, 4, 5};
  const auto r1 = run(target, p, seeds);
  p.parallel = false;
  const auto r2 = run(target, p, seeds);
  REQUIRE(r1.chains.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(r1.chains[k].draws == r2.chains[k].draws);
  const std::vector<std::uint64_t> repeated{3, 3};
  CHECK_THROWS(run(target, p, repeated));
}

TEST_CASE("initialization") {
  NormalTarget target({0}, {1});
  const auto a = initialize(target, 8, 1);
  const auto b = initialize(target, 8, 1);
  CHECK(a.position == b.position);
  try {
    initialize(ImpossibleTarget(), 8, 5);
    FAIL("expected SamplerError");
  } catch (const SamplerError& e) {
    CHECK(std::string(e.what()).find("item 7") != std::string::npos);
  }
}

TEST_CASE("conjugate Beta-Binomial posterior") {
  BetaBinomialTarget target(1, 1, 10, 20);
  RunProtocol p;
  p.n_chains = 2;
  p.n_iterations = 55000;
  p.burn_in = 5000;
  p.thin = 2;
  p.parallel = false;
  const auto r = run(target, p, derive_seeds(2024, 2));
  REQUIRE(r.retained_draws() == 50000);
  auto draws = sevsyn::testing::pooled(r, 0);
  for (auto& v : draws) v = inv_logit(v);

  DrawTable table;
  table.names = {"p"};
  for (const auto& c : r.chains) {
    std::vector<double> col;
    for (std::size_t d = 0; d < c.size(); ++d) col.push_back(inv_logit(c.draw(d)[0]));
    table.chains.push_back(col);
  }
  const auto ess = effective_sample_size(table.series(0));
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  const double sd = std::sqrt(11.0 * 11.0 / (22.0 * 22.0 * 23.0));
  CHECK(std::abs(mean - 0.5) < 3 * sd / std::sqrt(ess));

  std::sort(draws.begin(), draws.end());
  const boost::math::beta_distribution<> oracle(11, 11);
  for (double q : {0.05, 0.25, 0.5, 0.75, 0.95})
    CHECK(std::abs(quantile_type7(draws, q) - boost::math::quantile(oracle, q)) < 0.01);
  CHECK(rhat(table.series(0)).value < 1.05);
}

TEST_CASE("R-hat") {
  SUBCASE("constant chains") {
    const std::vector<std::vector<double>> same(3, std::vector<double>(50, 2.0));
    const auto r = rhat(same);
    CHECK(r.degenerate);
    CHECK(r.value == 1.0);
    const std::vector<std::vector<double>> apart{std::vector<double>(50, 1.0), std::vector<double>(50, 2.0)};
    CHECK(std::isinf(rhat(apart).value));
    CHECK(effective_sample_size(same) == 150.0);
  }
  SUBCASE("same target") {
    NormalTarget target({0}, {1});
    RunProtocol p;
    p.n_chains = 4;
    p.n_iterations = 20000;
    p.burn_in = 2000;
    p.thin = 2;
    p.parallel = false;
    const auto r = run(target, p, derive_seeds(6, 4));
    std::vector<std::vector<double>> chains;
    for (const auto& c : r.chains) chains.push_back({c.draws.begin(), c.draws.end()});
    CHECK(rhat(chains).value < 1.05);
    const double ess = effective_sample_size(chains);
    CHECK(ess > 1000);
    CHECK(ess <= 4 * 9000);
  }
  SUBCASE("separated chains") {
    Rng rng(1);
    std::vector<std::vector<double>> chains(2);
    for (int i = 0; i < 1000; ++i) {
      chains[0].push_back(rng.normal());
      chains[1].push_back(10 + rng.normal());
    }
    // Direct formula on unsplit chains: W ~ 1, B/n ~ 50.
    double m0 = 0, m1 = 0;
    for (int i = 0; i < 1000; ++i) m0 += chains[0][i] / 1000, m1 += chains[1][i] / 1000;
    double w = 0;
    for (int i = 0; i < 1000; ++i)
      w += ((chains[0][i] - m0) * (chains[0][i] - m0) + (chains[1][i] - m1) * (chains[1][i] - m1)) / (2 * 999.0);
    const double b_over_n = (m0 - m1) * (m0 - m1) / 2;
    const double direct = std::sqrt((999.0 / 1000 * w + b_over_n) / w);
    CHECK(direct > 1.5);
    CHECK(rhat(chains).value > 1.5);
  }
}

TEST_CASE("autocovariance by FFT equals the direct sum") {
  Rng rng(12);
  std::vector<double> x(257);
  double ar = 0;
  for (auto& v : x) v = ar = 0.7 * ar + rng.normal();
  const auto fast = autocovariance(x);
  const double n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  REQUIRE(fast.size() == x.size());
  for (std::size_t lag = 0; lag < x.size(); lag += 16) {
    double s = 0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    CHECK(fast[lag] == doctest::Approx(s / n).epsilon(1e-9).scale(1.0));
  }
}
