#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "sevsyn/errors.hpp"
#include "sevsyn/models.hpp"
#include "sevsyn/simgen.hpp"
#include "sevsyn/special.hpp"

using namespace sevsyn;

namespace {

ModelSpec desk_spec(Variant v, const Scenario& sc, std::vector<EvidenceItem> evidence) {
  ModelSpec spec(v, sc.grid);
  spec.aggregation = sc.aggregation;
  spec.evidence = std::move(evidence);
  spec.priors = detection_priors(sc, 0.15);
  spec.strict_priors = false;
  return spec;
}

std::vector<double> prior_point(const SeverityModel& m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> u(m.dimension());
  m.sample_initial(rng, u);
  return u;
}

double quantity(const SeverityModel& m, std::span<const double> u, const std::string& name) {
  std::vector<double> q(m.quantity_names().size());
  m.quantities(u, q);
  for (std::size_t i = 0; i < q.size(); ++i)
    if (m.quantity_names()[i] == name) return q[i];
  FAIL("no quantity " << name);
  return 0;
}

}  // namespace

TEST_CASE("variant C dimension matches a hand count") {
  const auto sc = desk_scenario({1, 2, 3}, 1);
  SeverityModel m(desk_spec(Variant::C, sc, {}));
  const std::size_t ages = 7;
  const std::size_t hand = ages * 3      // IAR simplex (4 components)
                           + ages        // baseline prevalence
                           + 1           // shared c_{S|Inf}
                           + ages * 3 * 2  // c_{H|S}, c_{I|H}, c_{D|H}, waves 1-2
                           + ages * 3      // wave-3 innovations z
                           + 3             // tau per linked pair
                           + ages * 3      // d_S per wave and age
                           + 3 * 3;        // d_H, d_I, d_D per wave
  CHECK(m.dimension() == hand);
  CHECK(hand == 125);
  const auto audit = m.symbol_audit();
  CHECK(std::find(audit.begin(), audit.end(), "tau.h_s") != audit.end());
  CHECK(std::find(audit.begin(), audit.end(), "c_s_inf") != audit.end());
  CHECK(m.priors().find("c_s_inf"));
  CHECK_FALSE(m.priors().find("c_s_inf.w1.a1"));
}

TEST_CASE("empty evidence leaves the prior") {
  const auto sc = desk_scenario({1, 2}, 1);
  SeverityModel m(desk_spec(Variant::A, sc, {}));
  const auto u = prior_point(m, 3);
  CHECK(m.log_likelihood(u) == 0.0);
  CHECK(m.log_density(u) == doctest::Approx(m.log_prior(u)).epsilon(1e-14));
  CHECK_FALSE(m.warnings().empty());
}

TEST_CASE("evaluator composes module-level calls") {
  const auto sc = desk_scenario({1, 2, 3}, 5);
  const auto data = generate(sc);
  SeverityModel m(desk_spec(Variant::C, sc, data.evidence));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto u = prior_point(m, seed);
    const auto st = m.decode(u);
    const double lik = total_loglik(m.evidence(), st, m.grid(), m.aggregation());
    CHECK(m.log_likelihood(u) == doctest::Approx(lik).epsilon(1e-12));
    CHECK(m.log_prior(u) == doctest::Approx(log_prior_density(u, m.priors())).epsilon(1e-12));
    CHECK(m.log_density(u) == doctest::Approx(lik + m.log_prior(u)).epsilon(1e-12));
  }
}

TEST_CASE("block densities track full-density differences") {
  const auto sc = desk_scenario({1, 2, 3}, 9);
  const auto data = generate(sc);
  SeverityModel m(desk_spec(Variant::C, sc, data.evidence));
  auto u = prior_point(m, 2);
  Rng rng(77);
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    const auto& blk = m.blocks()[b];
    auto v = u;
    for (std::size_t i = 0; i < blk.size; ++i) v[blk.offset + i] += 0.05 * rng.normal();
    const double full = m.log_density(v) - m.log_density(u);
    const double local = m.block_log_density(b, v) - m.block_log_density(b, u);
    if (!std::isfinite(full)) {
      CHECK_FALSE(std::isfinite(local));
      continue;
    }
    CHECK(local == doctest::Approx(full).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("wave linkage") {
  CHECK(link_third_wave(0.3, 0.0, 1.7) == 0.3);
  CHECK(inv_logit(link_third_wave(logit(0.5), 0.5, 2.0)) == doctest::Approx(0.7311).epsilon(1e-4));
  const auto [lo, hi] = odds_ratio_interval(1.0);
  CHECK(lo == doctest::Approx(0.1408).epsilon(1e-3));
  CHECK(hi == doctest::Approx(7.0993).epsilon(1e-4));

  const auto sc = desk_scenario({1, 2, 3}, 1);
  auto spec = desk_spec(Variant::C, sc, {});
  spec.priors.set("tau", FixedSpec{0});
  SeverityModel m(spec);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto st = m.decode(prior_point(m, seed));
    for (std::size_t a = 0; a < 7; ++a) {
      CHECK(st.cond.at(3, a).h_given_s == st.cond.at(2, a).h_given_s);
      CHECK(st.cond.at(3, a).i_given_h == st.cond.at(2, a).i_given_h);
      CHECK(st.cond.at(3, a).d_given_h == st.cond.at(2, a).d_given_h);
      CHECK(st.cond.at(3, a).s_given_inf == st.cond.at(1, 0).s_given_inf);
    }
  }

  auto unlinked = desk_spec(Variant::C, sc, {});
  unlinked.linked_pairs = {"h_s"};
  SeverityModel partial(unlinked);
  CHECK(partial.priors().find("tau.h_s"));
  CHECK_FALSE(partial.priors().find("tau.d_h"));
  CHECK(partial.priors().find("c_d_h.w3.a1"));
}

TEST_CASE("functional parameters") {
  const auto sc = desk_scenario({1, 2, 3}, 4);
  SeverityModel m(desk_spec(Variant::C, sc, {}));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto u = prior_point(m, seed);
    const auto st = m.decode(u);
    for (int w : {1, 2, 3})
      for (std::size_t a = 0; a < 7; ++a) {
        const auto& c = st.cond.at(w, a);
        const auto A = ".w" + std::to_string(w) + ".a" + std::to_string(a + 1);
        const double cfr = c.d_given_h * c.h_given_s * c.s_given_inf;
        CHECK(std::abs(quantity(m, u, "cfr" + A) - cfr) <= 1e-12 * cfr);
        const double scir = c.i_given_h * c.h_given_s;
        CHECK(std::abs(quantity(m, u, "scir" + A) - scir) <= 1e-12 * scir);
        CHECK(quantity(m, u, "n_d" + A) == doctest::Approx(sc.grid.population(a) * c.iar * cfr).epsilon(1e-12));
      }
    double inf = 0, dead = 0;
    for (std::size_t a = 0; a < 7; ++a) {
      const auto& c = st.cond.at(2, a);
      inf += sc.grid.population(a) * c.iar;
      dead += sc.grid.population(a) * c.iar * c.s_given_inf * c.h_given_s * c.d_given_h;
    }
    CHECK(quantity(m, u, "cfr.w2.all") == doctest::Approx(dead / inf).epsilon(1e-12));
  }

  ConditionalProbs cond({1}, 1);
  cond.at(1, 0) = CellProbs{0, 0.5, 0.1, 0.1, 0.1};
  PyramidState st;
  st.cond = cond;
  const AgeGrid grid({"all"}, {1000});
  st.counts = compute_latent_counts(cond, grid);
  st.detection = DetectionProbs({1}, 1);
  st.reference_prevalence = {0.0};
  const std::vector<int> waves{1};
  const auto names = functional_names(waves, 1);
  std::vector<double> out(names.size());
  functional_values(st, grid, out);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind("n_", 0) == 0 || names[i].rfind("sar.", 0) == 0) CHECK(out[i] == 0.0);
}

TEST_CASE("two-stage transfer") {
  const AgeGrid grid({"young", "old"}, {100, 100});
  PosteriorSummary s1;
  for (std::size_t a = 0; a < 2; ++a) {
    const auto A = ".a" + std::to_string(a + 1);
    s1.rows.push_back({"prev.w2" + A, 0.3 + 0.1 * a, 0.1});
    for (const char* sym : {"c_s_inf", "c_h_s", "c_i_h", "c_d_h"}) s1.rows.push_back({std::string(sym) + ".w2" + A, 0.2, 0.05});
  }
  const auto t = two_stage_transfer(s1, grid);
  REQUIRE(t.entries.size() == 10);
  const auto& prev = std::get<DirichletSpec>(t.entries[0].prior);
  CHECK(prev.concentration[0] == doctest::Approx(6.0 / 7).epsilon(1e-12));
  CHECK(t.entries[0].parameter == "prev.a1");
  CHECK(t.entries[0].induced_mean == doctest::Approx((6.0 / 7) / (6.0 / 7 + 2)).epsilon(1e-12));
  CHECK(t.entries[0].stage1_mean == 0.3);
  CHECK(t.entries[1].parameter == "c_s_inf.w3.a1");
  CHECK(t.entries[1].induced_mean == doctest::Approx(0.2).epsilon(1e-12));

  // Round trip through the transfer file, then the variant-B prior it induces.
  const auto path = std::filesystem::temp_directory_path() / "sevsyn_transfer_test.csv";
  write_transfer(path, t);
  const auto back = load_transfer(path);
  std::filesystem::remove(path);
  REQUIRE(back.entries.size() == t.entries.size());
  CHECK(describe(back.entries[3].prior) == describe(t.entries[3].prior));

  ModelSpec spec(Variant::B, grid);
  spec.priors = back.overrides();
  SeverityModel m(spec);
  Rng rng(5);
  std::vector<double> u(m.dimension());
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    m.priors().sample(rng, u);
    const double v = quantity(m, u, "prev.w2.a1");
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - t.entries[0].induced_mean) < 3 * se);

  s1.rows[5].sd = 0.0;
  CHECK_THROWS_AS(two_stage_transfer(s1, grid), ConfigError);
  s1.rows.erase(s1.rows.begin());
  try {
    two_stage_transfer(s1, grid);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("young") != std::string::npos);
  }
}

TEST_CASE("configuration errors") {
  const auto sc = desk_scenario({1, 2}, 1);
  auto spec = desk_spec(Variant::A, sc, {});
  spec.strict_priors = true;
  spec.priors.set("c_x_y", BetaSpec{1, 1, {}});
  CHECK_THROWS_AS(SeverityModel{spec}, ConfigError);

  CHECK_THROWS_AS(SeverityModel(ModelSpec(Variant::B, sc.grid)), ConfigError);

  auto bad_band = desk_spec(Variant::A, sc, {});
  EvidenceItem item;
  item.kind = EvidenceKind::DetectionCount;
  item.wave = 1;
  item.band = "90+";
  item.count = 1;
  bad_band.evidence = {item};
  CHECK_THROWS(SeverityModel{bad_band});

  auto wrong_wave = desk_spec(Variant::A, sc, {});
  item.band = "65+";
  item.wave = 3;
  wrong_wave.evidence = {item};
  CHECK_THROWS_AS(SeverityModel{wrong_wave}, ConfigError);
  CHECK(parse_variant("C") == Variant::C);
  CHECK_THROWS_AS(parse_variant("D"), ConfigError);
}

TEST_CASE("initialization repairs impossible prior draws") {
  const auto sc = desk_scenario({1, 2}, 1);
  auto spec = desk_spec(Variant::A, sc, {});
  EvidenceItem item;
  item.kind = EvidenceKind::DetectionCount;
  item.wave = 1;
  item.band = "65+";
  item.level = SeverityLevel::H;
  item.count = 2000;  // feasible only for a large attack rate
  spec.evidence = {item};
  SeverityModel m(spec);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) CHECK(std::isfinite(m.log_density(prior_point(m, seed))));

  item.count = 1e6;  // exceeds the population
  spec.evidence = {item};
  SeverityModel impossible(spec);
  auto u = prior_point(impossible, 1);
  CHECK_FALSE(std::isfinite(impossible.log_density(u)));
  CHECK(impossible.explain_nonfinite(u).find("65+") != std::string::npos);
  CHECK_THROWS_AS(initialize(impossible, 1, 3), SamplerError);
}
