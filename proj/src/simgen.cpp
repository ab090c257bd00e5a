#include "sevsyn/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "sevsyn/csv.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/special.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

bool unit(double x) { return x >= 0.0 && x <= 1.0; }

double to_count(std::int64_t n) { return static_cast<double>(n); }

}  // namespace

void Scenario::validate() const {
  const auto& ws = waves();
  const std::size_t na = grid.size();
  if (truth.n_ages() != na) throw ConfigError("scenario: truth table does not match the age grid");
  try {
    truth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (baseline_prevalence.size() != na) throw ConfigError("scenario: one baseline prevalence per age band required");
  for (std::size_t a = 0; a < na; ++a) {
    double total = baseline_prevalence[a];
    for (int w : ws) total += truth.at(w, a).iar;
    if (!unit(baseline_prevalence[a]) || total > 1.0)
      throw ConfigError("scenario: baseline prevalence plus attack rates exceeds 1 in band " + grid.label(a));
    for (int w : ws) {
      if (!unit(detection.symptomatic(w, a))) throw ConfigError("scenario: d_S out of range");
      for (auto l : {SeverityLevel::H, SeverityLevel::I, SeverityLevel::D})
        if (!unit(detection.severe(w, l))) throw ConfigError("scenario: severe detection out of range");
    }
  }
  auto check = [&](const std::vector<int>& v, const char* what) {
    for (int w : v)
      if (!contains(ws, w)) throw ConfigError(std::string("scenario: ") + what + " names wave " + std::to_string(w));
  };
  const auto& d = design;
  for (int t : d.sero_timepoints)
    if (t != 0 && !contains(ws, t)) throw ConfigError("scenario: sero timepoint " + std::to_string(t));
  check(d.estimate_waves, "estimate_waves");
  check(d.hospital_waves, "hospital_waves");
  check(d.icu_waves, "icu_waves");
  check(d.death_waves, "death_waves");
  check(d.outcome_waves, "outcome_waves");
  check(d.icu_logcount_waves, "icu_logcount_waves");
  check(d.symptomatic_logcount_waves, "symptomatic_logcount_waves");
  if (!(d.sero_sample_size >= 0) || d.sero_sample_size != std::floor(d.sero_sample_size))
    throw ConfigError("scenario: sero sample size must be a nonnegative integer");
  for (double sd : {d.estimate_sd_log, d.icu_logcount_sd, d.symptomatic_logcount_sd})
    if (!(sd > 0.0)) throw ConfigError("scenario: log-scale sd must be > 0");
  if (!d.icu_logcount_waves.empty() && aggregation && !aggregation->has_level(SeverityLevel::I))
    throw ConfigError("scenario: ICU log counts need coarse bands for level I");
}

GeneratedData generate(const Scenario& sc) {
  sc.validate();
  const auto& ws = sc.waves();
  const auto& grid = sc.grid;
  const std::size_t na = grid.size();
  const auto agg = sc.aggregation ? *sc.aggregation : AgeAggregation::identity(grid);
  const auto& design = sc.design;
  Rng rng(sc.seed);

  GeneratedData out;
  out.realized = LatentCounts(ws, na);
  for (int w : ws)
    for (std::size_t a = 0; a < na; ++a) {
      const auto& c = sc.truth.at(w, a);
      auto& n = out.realized.at(w, a);
      const auto pop = static_cast<std::int64_t>(std::llround(grid.population(a)));
      const auto inf = rng.binomial(pop, c.iar);
      const auto s = rng.binomial(inf, c.s_given_inf);
      const auto h = rng.binomial(s, c.h_given_s);
      const auto i = rng.binomial(h, c.i_given_h);
      const auto d = rng.binomial(h, c.d_given_h);
      n = {to_count(inf), to_count(s), to_count(h), to_count(i), to_count(d)};
    }

  auto item = [](EvidenceKind kind, int wave, std::string band, SeverityLevel level) {
    EvidenceItem e;
    e.kind = kind;
    e.wave = wave;
    e.band = std::move(band);
    e.level = level;
    return e;
  };
  auto realized = [&](int w, std::size_t a, SeverityLevel l) {
    return out.realized.at(w, a)[static_cast<std::size_t>(l)];
  };

  for (int t : design.sero_timepoints) {
    if (design.sero_sample_size <= 0) break;
    for (std::size_t a = 0; a < na; ++a) {
      double prev = sc.baseline_prevalence[a];
      for (int w : ws)
        if (w <= t) prev += sc.truth.at(w, a).iar;
      auto e = item(EvidenceKind::SeroSample, t, grid.label(a), SeverityLevel::Inf);
      e.sample_size = design.sero_sample_size;
      e.count = to_count(rng.binomial(static_cast<std::int64_t>(design.sero_sample_size), std::min(prev, 1.0)));
      out.evidence.push_back(std::move(e));
    }
  }

  for (int w : ws) {
    for (std::size_t a = 0; a < na; ++a) {
      const auto& label = grid.label(a);
      if (contains(design.estimate_waves, w)) {
        const double latent = sc.detection.symptomatic(w, a) * realized(w, a, SeverityLevel::S);
        if (latent > 0.0) {
          auto e = item(EvidenceKind::LogNormalEstimate, w, label, SeverityLevel::S);
          e.sd_log = design.estimate_sd_log;
          e.mean_log = std::log(latent) + e.sd_log * rng.normal();
          out.evidence.push_back(std::move(e));
        }
      }
      if (contains(design.symptomatic_logcount_waves, w)) {
        const double latent = realized(w, a, SeverityLevel::S);
        if (latent > 0.0) {
          auto e = item(EvidenceKind::NormalLogCount, w, label, SeverityLevel::S);
          e.sd_log = design.symptomatic_logcount_sd;
          e.mean_log = std::log(latent) + e.sd_log * rng.normal();
          out.evidence.push_back(std::move(e));
        }
      }
      // Detected hospital cases are drawn whenever they are reported or serve
      // as the cohort for conditional outcomes.
      const bool hospital = contains(design.hospital_waves, w);
      const bool outcomes = contains(design.outcome_waves, w);
      if (hospital || outcomes) {
        const auto n_h = static_cast<std::int64_t>(realized(w, a, SeverityLevel::H));
        const auto observed = rng.binomial(n_h, sc.detection.severe(w, SeverityLevel::H));
        if (hospital) {
          auto e = item(EvidenceKind::DetectionCount, w, label, SeverityLevel::H);
          e.count = to_count(observed);
          out.evidence.push_back(std::move(e));
        }
        if (outcomes)
          for (auto l : {SeverityLevel::I, SeverityLevel::D}) {
            auto e = item(EvidenceKind::ConditionalOutcome, w, label, l);
            e.parent_count = to_count(observed);
            e.count = to_count(rng.binomial(observed, sc.truth.at(w, a).conditional(l)));
            out.evidence.push_back(std::move(e));
          }
      }
      for (auto [waves, level] : {std::pair{&design.icu_waves, SeverityLevel::I},
                                  std::pair{&design.death_waves, SeverityLevel::D}}) {
        if (!contains(*waves, w)) continue;
        auto e = item(EvidenceKind::DetectionCount, w, label, level);
        e.count = to_count(
            rng.binomial(static_cast<std::int64_t>(realized(w, a, level)), sc.detection.severe(w, level)));
        out.evidence.push_back(std::move(e));
      }
    }
    if (contains(design.icu_logcount_waves, w)) {
      const auto& bands = agg.has_level(SeverityLevel::I) ? agg.bands(SeverityLevel::I)
                                                          : AgeAggregation::identity(grid).bands(SeverityLevel::I);
      for (const auto& band : bands) {
        double latent = 0.0;
        for (auto a : band.members) latent += realized(w, a, SeverityLevel::I);
        latent *= sc.detection.severe(w, SeverityLevel::I);
        if (latent <= 0.0) continue;
        auto e = item(EvidenceKind::NormalLogCount, w, band.name, SeverityLevel::I);
        e.detected = true;
        e.sd_log = design.icu_logcount_sd;
        e.mean_log = std::log(latent) + e.sd_log * rng.normal();
        out.evidence.push_back(std::move(e));
      }
    }
  }
  for (const auto& e : out.evidence) validate_item(e, grid, agg, "simgen");

  PyramidState state{sc.truth, compute_latent_counts(sc.truth, grid), sc.detection, 0, sc.baseline_prevalence};
  const auto names = functional_names(ws, na);
  std::vector<double> values(names.size());
  functional_values(state, grid, values);
  for (std::size_t i = 0; i < names.size(); ++i) out.truth.emplace_back(names[i], values[i]);
  for (std::size_t a = 0; a < na; ++a)
    out.truth.emplace_back(quantity_name("pi_base", std::nullopt, a), sc.baseline_prevalence[a]);
  static constexpr std::array<const char*, 5> kRealized = {"realized.n_inf", "realized.n_s", "realized.n_h",
                                                           "realized.n_i", "realized.n_d"};
  for (int w : ws)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t l = 0; l < 5; ++l)
        out.truth.emplace_back(quantity_name(kRealized[l], w, a), out.realized.at(w, a)[l]);
  return out;
}

void write_truth(const std::filesystem::path& path, const TruthTable& truth) {
  CsvWriter out(path);
  out.row({"quantity", "value"});
  for (const auto& [q, v] : truth) out.row({q, text::format_double(v)});
}

TruthTable load_truth(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto q = table.require_column("quantity");
  const auto v = table.require_column("value");
  TruthTable out;
  for (const auto& r : table.rows()) {
    const auto value = text::to_double(r.fields[v]);
    if (!value) throw DataError(table.source(), r.line, "cannot parse value '" + r.fields[v] + "'");
    out.emplace_back(r.fields[q], *value);
  }
  return out;
}

std::size_t CoverageReport::covered() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.covered; }));
}

double CoverageReport::rate() const {
  return rows.empty() ? 0.0 : static_cast<double>(covered()) / static_cast<double>(rows.size());
}

CoverageReport recovery_report(const TruthTable& truth, const PosteriorSummary& posterior,
                               std::span<const std::string> patterns) {
  CoverageReport out;
  for (const auto& [name, value] : truth) {
    const bool selected =
        std::any_of(patterns.begin(), patterns.end(), [&](const auto& p) { return text::wildcard_match(p, name); });
    if (!selected) continue;
    const auto* row = posterior.find(name);
    if (!row) throw ConfigError("recovery: posterior has no quantity '" + name + "'");
    out.rows.push_back({name, value, row->lo, row->hi, row->lo <= value && value <= row->hi});
  }
  if (out.rows.empty()) throw ConfigError("recovery: no truth quantity matches the requested patterns");
  return out;
}

Scenario desk_scenario(const std::vector<int>& waves, std::uint64_t seed) {
  auto grid = AgeGrid::standard(std::vector<double>(7, 1e5));
  const std::size_t na = grid.size();
  // Per-age attack rates of waves 1, 2, 3 and baseline prevalence.
  const std::array<std::array<double, 7>, 3> iar = {{{0.06, 0.10, 0.16, 0.10, 0.06, 0.04, 0.02},
                                                     {0.10, 0.14, 0.20, 0.14, 0.10, 0.06, 0.03},
                                                     {0.08, 0.10, 0.12, 0.10, 0.08, 0.06, 0.04}}};
  const std::array<double, 7> base = {0.02, 0.02, 0.03, 0.05, 0.08, 0.12, 0.20};
  const std::array<double, 7> h_s = {0.06, 0.03, 0.02, 0.03, 0.04, 0.06, 0.10};
  const std::array<double, 7> i_h = {0.10, 0.08, 0.10, 0.15, 0.20, 0.25, 0.20};
  const std::array<double, 7> d_h = {0.03, 0.02, 0.03, 0.04, 0.06, 0.10, 0.15};
  // Wave-3 odds multipliers on the wave-2 conditionals.
  const std::array<double, 3> shift = {1.2, 0.9, 1.1};

  ConditionalProbs truth(waves, na);
  DetectionProbs detection(waves, na);
  for (int w : waves) {
    if (w < 1 || w > 3) throw ConfigError("desk scenario: waves must lie in 1..3");
    for (std::size_t a = 0; a < na; ++a) {
      auto& c = truth.at(w, a);
      c.iar = iar[static_cast<std::size_t>(w - 1)][a];
      c.s_given_inf = 0.5;
      c.h_given_s = h_s[a];
      c.i_given_h = i_h[a];
      c.d_given_h = d_h[a];
      if (w == 3) {
        auto odds = [](double p, double k) { return inv_logit(logit(p) + std::log(k)); };
        c.h_given_s = odds(c.h_given_s, shift[0]);
        c.i_given_h = odds(c.i_given_h, shift[1]);
        c.d_given_h = odds(c.d_given_h, shift[2]);
      }
      detection.symptomatic(w, a) = 0.3 + 0.02 * static_cast<double>(a);
    }
    detection.severe(w, SeverityLevel::H) = 0.6;
    detection.severe(w, SeverityLevel::I) = 0.8;
    detection.severe(w, SeverityLevel::D) = 0.7;
  }

  Scenario sc(grid, std::move(truth), std::move(detection));
  sc.baseline_prevalence.assign(base.begin(), base.end());
  sc.seed = seed;
  auto keep = [&](std::vector<int>& v) { std::erase_if(v, [&](int w) { return !contains(waves, w); }); };
  auto& d = sc.design;
  std::erase_if(d.sero_timepoints, [&](int t) { return t != 0 && !contains(waves, t); });
  for (auto* v : {&d.estimate_waves, &d.hospital_waves, &d.icu_waves, &d.death_waves, &d.outcome_waves,
                  &d.icu_logcount_waves, &d.symptomatic_logcount_waves})
    keep(*v);
  if (!d.icu_logcount_waves.empty()) {
    AgeAggregation agg = AgeAggregation::identity(sc.grid);
    const auto l = AgeGrid::standard_labels();
    agg.set_bands(SeverityLevel::I, sc.grid,
                  {{"0-14", {l[0], l[1], l[2]}}, {"15-44", {l[3], l[4]}}, {"45+", {l[5], l[6]}}});
    sc.aggregation = std::move(agg);
  }
  return sc;
}

PriorOverrides detection_priors(const Scenario& sc, double relative_sd) {
  PriorOverrides out;
  auto beta = [&](double d) { return PriorSpec(moment_match_beta(d, relative_sd * d)); };
  for (int w : sc.waves()) {
    for (std::size_t a = 0; a < sc.grid.size(); ++a)
      out.set(quantity_name("d_s", w, a), beta(sc.detection.symptomatic(w, a)));
    out.set(quantity_name("d_h", w, std::nullopt), beta(sc.detection.severe(w, SeverityLevel::H)));
    out.set(quantity_name("d_i", w, std::nullopt), beta(sc.detection.severe(w, SeverityLevel::I)));
    out.set(quantity_name("d_d", w, std::nullopt), beta(sc.detection.severe(w, SeverityLevel::D)));
  }
  return out;
}

SentinelData generate_sentinel(const SentinelScenario& sc) {
  const std::size_t na = sc.ages.size();
  if (sc.weeks == 0 || na == 0) throw ConfigError("sentinel scenario: need at least one week and one age band");
  if (sc.population.size() != na || sc.truth.propensity.size() != na)
    throw ConfigError("sentinel scenario: population and propensity need one entry per age band");
  if (sc.truth.rate_week.size() != sc.weeks || sc.truth.pos_week.size() != sc.weeks ||
      sc.truth.rate_age.size() != na || sc.truth.pos_age.size() != na)
    throw ConfigError("sentinel scenario: coefficient vectors do not match the week/age grid");
  if (!(sc.denominator > 0) || !unit(sc.swab_fraction) || !(sc.truth.dispersion > 0))
    throw ConfigError("sentinel scenario: denominator, swab fraction or dispersion out of range");

  std::vector<int> weeks(sc.weeks);
  for (std::size_t t = 0; t < sc.weeks; ++t) weeks[t] = static_cast<int>(t + 1);
  SentinelData out{SentinelSeries(weeks, sc.ages), {}};
  Rng rng(sc.seed);
  for (std::size_t t = 0; t < sc.weeks; ++t)
    for (std::size_t a = 0; a < na; ++a) {
      auto& cell = out.series.cell(t, a);
      cell.denominator = sc.denominator;
      const auto ili = rng.negative_binomial(sc.denominator * sc.truth.rate(t, a), sc.truth.dispersion);
      cell.ili_count = to_count(ili);
      SwabGroup g;
      const auto swabs = rng.binomial(ili, sc.swab_fraction);
      g.total = to_count(swabs);
      g.positive = to_count(rng.binomial(swabs, sc.truth.positivity(t, a)));
      cell.swabs.push_back(g);
    }
  out.series.validate();
  out.log_n = log_symptomatic(out.series, sc.truth, sc.population);
  return out;
}

SentinelScenario desk_sentinel(const AgeGrid& grid, std::uint64_t seed) {
  const std::size_t na = grid.size();
  SentinelScenario sc;
  sc.ages = grid.labels();
  sc.population = grid.population();
  sc.weeks = 10;
  sc.denominator = 2e4;
  sc.swab_fraction = 0.3;
  sc.seed = seed;
  auto& p = sc.truth;
  p.rate_intercept = std::log(2e-3);
  p.pos_intercept = -1.0;
  for (std::size_t t = 0; t < sc.weeks; ++t) {
    // Rise and fall around week 5, relative to week 1.
    const double x = static_cast<double>(t) - 4.5;
    const double shape = -0.08 * x * x + 0.08 * 4.5 * 4.5;
    p.rate_week.push_back(t == 0 ? 0.0 : shape);
    p.pos_week.push_back(t == 0 ? 0.0 : 0.5 * shape);
  }
  for (std::size_t a = 0; a < na; ++a) {
    p.rate_age.push_back(a == 0 ? 0.0 : 0.3 - 0.1 * static_cast<double>(a));
    p.pos_age.push_back(a == 0 ? 0.0 : 0.2 - 0.1 * static_cast<double>(a));
  }
  const std::array<double, 7> propensity = {0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7};
  for (std::size_t a = 0; a < na; ++a) p.propensity.push_back(propensity[a % propensity.size()]);
  p.dispersion = 20.0;
  return sc;
}

SentinelScenario matched_sentinel(const Scenario& scenario, std::uint64_t seed) {
  if (!contains(scenario.waves(), 3)) throw ConfigError("matched sentinel: the scenario has no wave 3");
  auto sc = desk_sentinel(scenario.grid, seed);
  const auto counts = compute_latent_counts(scenario.truth, scenario.grid);
  auto& p = sc.truth;
  std::fill(p.rate_age.begin(), p.rate_age.end(), 0.0);
  // Rate enters log N_S additively through intercept + age effect.
  SentinelSeries shape(std::vector<int>(sc.weeks, 0), sc.ages);
  for (std::size_t t = 0; t < sc.weeks; ++t)
    for (std::size_t a = 0; a < sc.ages.size(); ++a) shape.cell(t, a).denominator = 1;
  const auto base = log_symptomatic(shape, p, sc.population);
  std::vector<double> shift(sc.ages.size());
  for (std::size_t a = 0; a < shift.size(); ++a)
    shift[a] = std::log(counts.at(3, a, SeverityLevel::S)) - base[a];
  p.rate_intercept += shift[0];
  for (std::size_t a = 1; a < shift.size(); ++a) p.rate_age[a] = shift[a] - shift[0];
  return sc;
}

}  // namespace sevsyn
