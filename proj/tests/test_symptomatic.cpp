#include <doctest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/negative_binomial.hpp>

#include <cmath>
#include <limits>

#include "sevsyn/errors.hpp"
#include "sevsyn/simgen.hpp"
#include "sevsyn/symptomatic.hpp"

using namespace sevsyn;

namespace {

SentinelSeries one_cell(double ili, double denominator, std::vector<SwabGroup> swabs) {
  SentinelSeries s({1}, {"15-24"});
  s.cell(0, 0) = SentinelCell{ili, denominator, std::move(swabs)};
  return s;
}

RegressionParams flat_params(std::size_t weeks, std::size_t ages, double rate, double pos) {
  RegressionParams p;
  p.rate_intercept = std::log(rate);
  p.rate_week.assign(weeks, 0.0);
  p.rate_age.assign(ages, 0.0);
  p.pos_intercept = std::log(pos) - std::log1p(-pos);
  p.pos_week.assign(weeks, 0.0);
  p.pos_age.assign(ages, 0.0);
  p.propensity.assign(ages, 1.0);
  return p;
}

RunProtocol short_protocol() {
  RunProtocol p;
  p.n_chains = 2;
  p.n_iterations = 6000;
  p.burn_in = 2000;
  p.thin = 2;
  p.parallel = false;
  return p;
}

}  // namespace

TEST_CASE("consultation likelihood") {
  auto p = flat_params(1, 1, 3.0 / 100, 0.5);
  p.dispersion = 2;
  const boost::math::negative_binomial_distribution<> nb(2.0, 2.0 / (2.0 + 3.0));
  CHECK(loglik_consultations(one_cell(3, 100, {}), p) == doctest::Approx(std::log(boost::math::pdf(nb, 3))).epsilon(1e-10));

  p = flat_params(1, 1, 1e-12, 0.5);
  p.dispersion = 5;
  CHECK(loglik_consultations(one_cell(0, 100, {}), p) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("positivity likelihood") {
  const auto p = flat_params(1, 1, 0.01, 0.5);
  CHECK(loglik_positivity(one_cell(5, 100, {{2, 1, {}}}), p) == doctest::Approx(-0.6931).epsilon(1e-4));
  CHECK(loglik_positivity(one_cell(5, 100, {{0, 0, {}}}), p) == 0.0);
  const auto near_one = flat_params(1, 1, 0.01, 1 - 1e-12);
  CHECK(loglik_positivity(one_cell(5, 100, {{8, 8, {}}}), near_one) == doctest::Approx(0.0).epsilon(1e-9));
  const boost::math::binomial_distribution<> bin(20, 0.5);
  CHECK(loglik_positivity(one_cell(5, 100, {{12, 4, 1.0}, {8, 3, 6.0}}), p) ==
        doctest::Approx(std::log(boost::math::pdf(boost::math::binomial_distribution<>(12, 0.5), 4)) +
                        std::log(boost::math::pdf(boost::math::binomial_distribution<>(8, 0.5), 3)))
            .epsilon(1e-10));
}

TEST_CASE("symptomatic count from regression values") {
  const auto s = one_cell(10, 1000, {{10, 3, {}}});
  auto p = flat_params(1, 1, 0.02, 0.3);
  const std::vector<double> pop{50000};
  CHECK(log_symptomatic(s, p, pop)[0] == doctest::Approx(std::log(0.02 * 0.3 * 50000)).epsilon(1e-14));
  p.propensity[0] = 0.5;
  CHECK(std::exp(log_symptomatic(s, p, pop)[0]) == doctest::Approx(2 * 0.02 * 0.3 * 50000).epsilon(1e-12));
}

TEST_CASE("positivity restriction") {
  SentinelSeries s({1, 2}, {"15-24"});
  s.cell(0, 0) = SentinelCell{10, 100, {{5, 2, 1.0}, {4, 1, 7.0}}};
  s.cell(1, 0) = SentinelCell{10, 100, {{6, 3, 5.0}, {2, 2, 9.0}}};
  CHECK(restrict_positivity(s, std::numeric_limits<double>::infinity()).cell(0, 0).swabs.size() == 2);
  const auto r = restrict_positivity(s, 5);
  CHECK(r.cell(0, 0).swab_total() == 5);
  CHECK(r.cell(0, 0).swab_positive() == 2);
  CHECK(r.cell(1, 0).swab_total() == 6);
  CHECK(r.cell(1, 0).swab_positive() == 3);

  SentinelSeries late({1}, {"15-24"});
  late.cell(0, 0) = SentinelCell{10, 100, {{5, 2, 7.0}}};
  const auto empty = restrict_positivity(late, 5);
  CHECK(empty.cell(0, 0).swab_total() == 0);
  SymptomaticPriors pri;
  pri.propensity = {FixedSpec{0.5}};
  const AgeGrid grid({"15-24"}, {1000});
  CHECK_THROWS_AS(estimate_symptomatic(empty, pri, grid, short_protocol(), derive_seeds(1, 2)), DataError);

  SentinelSeries undated({1}, {"15-24"});
  undated.cell(0, 0) = SentinelCell{10, 100, {{5, 2, {}}}};
  CHECK_THROWS_AS(restrict_positivity(undated, 5), ConfigError);
}

TEST_CASE("sentinel file parsing") {
  const auto t = parse_csv(
      "week,age_band,ili_count,denominator,swab_total,swab_positive,swab_delay_days\n"
      "1,young,10,100,4,1,2\n1,young,10,100,3,2,6\n1,old,5,80,2,0,1\n",
      "sentinel.csv");
  const auto s = parse_sentinel(t);
  CHECK(s.n_weeks() == 1);
  CHECK(s.n_ages() == 2);
  CHECK(s.has_delays());
  CHECK(s.cell(0, 0).swab_total() == 7);
  CHECK_THROWS_AS(parse_sentinel(parse_csv("week,age_band,ili_count,denominator,swab_total,swab_positive\n"
                                           "1,young,10,100,4,5\n",
                                           "s.csv")),
                  DataError);
  CHECK_THROWS_AS(parse_sentinel(parse_csv("week,age_band,ili_count,denominator,swab_total,swab_positive\n"
                                           "1,young,10,100,4,1\n2,old,10,100,4,1\n",
                                           "s.csv")),
                  DataError);
}

TEST_CASE("propensity scaling and recovery") {
  const auto grid = AgeGrid::standard(std::vector<double>(7, 1e5));
  const auto sc = desk_sentinel(grid, 5);
  const auto data = generate_sentinel(sc);
  SymptomaticPriors pri;
  for (double v : sc.truth.propensity) pri.propensity.push_back(FixedSpec{v});
  const auto seeds = derive_seeds(12, 2);
  const auto fit = estimate_symptomatic(data.series, pri, grid, short_protocol(), seeds);
  REQUIRE(fit.summary.size() == 7);
  for (std::size_t a = 0; a < 7; ++a) {
    const auto& r = fit.summary[a];
    CHECK(r.age_band == grid.label(a));
    CHECK(std::abs(r.mean_log - data.log_n[a]) < 3 * std::sqrt(r.sd_log * r.sd_log + r.mcse * r.mcse));
  }

  auto halved = pri;
  for (auto& p : halved.propensity) p = FixedSpec{std::get<FixedSpec>(p).value / 2};
  const auto fit2 = estimate_symptomatic(data.series, halved, grid, short_protocol(), seeds);
  for (std::size_t a = 0; a < 7; ++a) {
    CHECK(fit2.summary[a].mean_log - fit.summary[a].mean_log == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(fit2.summary[a].sd_log == doctest::Approx(fit.summary[a].sd_log).epsilon(1e-9));
  }

  SymptomaticPriors missing;
  CHECK_THROWS_AS(estimate_symptomatic(data.series, missing, grid, short_protocol(), seeds), ConfigError);
}
