#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sevsyn/errors.hpp"
#include "sevsyn/evidence_io.hpp"
#include "sevsyn/simgen.hpp"

using namespace sevsyn;

namespace {

const EvidenceItem* find_item(const std::vector<EvidenceItem>& ev, EvidenceKind kind, int wave, const std::string& band,
                              SeverityLevel level) {
  for (const auto& e : ev)
    if (e.kind == kind && e.wave == wave && e.band == band && e.level == level) return &e;
  return nullptr;
}

double truth_of(const TruthTable& t, const std::string& name) {
  for (const auto& [k, v] : t)
    if (k == name) return v;
  FAIL("no truth for " << name);
  return 0;
}

}  // namespace

TEST_CASE("full detection reproduces realized counts") {
  auto sc = desk_scenario({1, 2}, 3);
  for (int w : {1, 2}) {
    for (auto l : {SeverityLevel::H, SeverityLevel::I, SeverityLevel::D}) sc.detection.severe(w, l) = 1.0;
    for (std::size_t a = 0; a < 7; ++a) sc.detection.symptomatic(w, a) = 1.0;
  }
  const auto data = generate(sc);
  for (int w : {1, 2})
    for (std::size_t a = 0; a < 7; ++a) {
      const auto* h = find_item(data.evidence, EvidenceKind::DetectionCount, w, sc.grid.label(a), SeverityLevel::H);
      REQUIRE(h);
      CHECK(h->count == data.realized.at(w, a, SeverityLevel::H));
      CHECK(truth_of(data.truth, "realized.n_h.w" + std::to_string(w) + ".a" + std::to_string(a + 1)) == h->count);
    }
}

TEST_CASE("zero attack rate") {
  auto sc = desk_scenario({1, 2}, 3);
  for (std::size_t a = 0; a < 7; ++a) sc.truth.at(1, a).iar = 0.0;
  const auto data = generate(sc);
  for (std::size_t a = 0; a < 7; ++a) {
    for (auto l : kAllLevels) CHECK(data.realized.at(1, a, l) == 0.0);
    const auto* h = find_item(data.evidence, EvidenceKind::DetectionCount, 1, sc.grid.label(a), SeverityLevel::H);
    REQUIRE(h);
    CHECK(h->count == 0.0);
    // Log-scale items of an empty latent are not emitted.
    CHECK_FALSE(find_item(data.evidence, EvidenceKind::LogNormalEstimate, 1, sc.grid.label(a), SeverityLevel::S));
  }
}

TEST_CASE("mean hospital count over replicates") {
  auto sc = desk_scenario({1}, 1);
  const std::size_t a = 6;
  const auto& c = sc.truth.at(1, a);
  const double expected = sc.detection.severe(1, SeverityLevel::H) * sc.grid.population(a) * c.iar * c.s_given_inf * c.h_given_s;
  const int n = 1000;
  double sum = 0, sum2 = 0;
  for (int r = 0; r < n; ++r) {
    sc.seed = 1000 + r;
    const auto data = generate(sc);
    const double v = find_item(data.evidence, EvidenceKind::DetectionCount, 1, sc.grid.label(a), SeverityLevel::H)->count;
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - expected) < 3 * se);
}

TEST_CASE("generation is seeded") {
  auto sc = desk_scenario({1, 2, 3}, 21);
  const auto a = generate(sc);
  const auto b = generate(sc);
  REQUIRE(a.evidence.size() == b.evidence.size());
  for (std::size_t i = 0; i < a.evidence.size(); ++i) {
    CHECK(a.evidence[i].count == b.evidence[i].count);
    CHECK(a.evidence[i].mean_log == b.evidence[i].mean_log);
  }
  sc.seed = 22;
  const auto c = generate(sc);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.evidence.size(), c.evidence.size()); ++i)
    differs = differs || a.evidence[i].count != c.evidence[i].count;
  CHECK(differs);
}

TEST_CASE("evidence and truth files round trip") {
  const auto sc = desk_scenario({1, 2, 3}, 8);
  const auto data = generate(sc);
  const auto dir = std::filesystem::temp_directory_path() / "sevsyn_simgen_test";
  std::filesystem::create_directories(dir);
  write_evidence(dir / "evidence.csv", data.evidence);
  const auto back = load_evidence(dir / "evidence.csv", sc.grid, *sc.aggregation);
  REQUIRE(back.size() == data.evidence.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].kind == data.evidence[i].kind);
    CHECK(back[i].band == data.evidence[i].band);
    CHECK(back[i].count == data.evidence[i].count);
    CHECK(back[i].mean_log == data.evidence[i].mean_log);
    CHECK(back[i].detected == data.evidence[i].detected);
  }
  write_truth(dir / "truth.csv", data.truth);
  const auto truth = load_truth(dir / "truth.csv");
  CHECK(truth == data.truth);
  std::filesystem::remove_all(dir);
}

TEST_CASE("coverage report") {
  const TruthTable truth{{"iar.w1.a1", 0.2}, {"cfr.w1.a1", 0.001}, {"d_h.w1", 0.9}};
  PosteriorSummary point;
  for (const auto& [k, v] : truth) point.rows.push_back({k, v, 0, v, v, v});
  const std::vector<std::string> patterns{"iar.w*.a*", "cfr.w*.a*"};
  const auto all = recovery_report(truth, point, patterns);
  CHECK(all.rows.size() == 2);
  CHECK(all.rate() == 1.0);

  PosteriorSummary shifted = point;
  for (auto& r : shifted.rows) r.lo += 1, r.hi += 1, r.median += 1;
  CHECK(recovery_report(truth, shifted, patterns).rate() == 0.0);

  const std::vector<std::string> none{"sym.*"};
  CHECK_THROWS_AS(recovery_report(truth, point, none), ConfigError);
  PosteriorSummary partial;
  partial.rows.push_back(point.rows[0]);
  CHECK_THROWS_AS(recovery_report(truth, partial, patterns), ConfigError);
}

TEST_CASE("scenario validation") {
  auto sc = desk_scenario({1, 2}, 1);
  CHECK_NOTHROW(sc.validate());
  sc.design.hospital_waves = {3};
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  auto bad = desk_scenario({1, 2}, 1);
  bad.detection.severe(1, SeverityLevel::H) = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("detection priors centre on the truth") {
  const auto sc = desk_scenario({1, 2, 3}, 1);
  const auto pri = detection_priors(sc, 0.15);
  const auto p = pri.lookup("d_h.w2");
  REQUIRE(p);
  const auto m = prior_moments(*p);
  CHECK(m.mean == doctest::Approx(sc.detection.severe(2, SeverityLevel::H)).epsilon(1e-12));
  CHECK(std::sqrt(m.variance) == doctest::Approx(0.15 * m.mean).epsilon(1e-12));
  CHECK(pri.lookup("d_s.w3.a7"));
}

TEST_CASE("sentinel generation") {
  const auto sc = desk_scenario({1, 2, 3}, 2);
  const auto sent = matched_sentinel(sc, 4);
  const auto d = generate_sentinel(sent);
  CHECK(d.series.n_weeks() == sent.weeks);
  CHECK(d.series.n_ages() == 7);
  CHECK_NOTHROW(d.series.validate());
  for (std::size_t a = 0; a < 7; ++a) {
    const auto cnt = compute_latent_counts(sc.truth, sc.grid);
    CHECK(d.log_n[a] == doctest::Approx(std::log(cnt.at(3, a, SeverityLevel::S))).epsilon(1e-10));
  }
  for (std::size_t t = 0; t < d.series.n_weeks(); ++t)
    for (std::size_t a = 0; a < 7; ++a) CHECK(d.series.cell(t, a).swab_positive() <= d.series.cell(t, a).swab_total());
}
