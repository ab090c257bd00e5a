#include "sevsyn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>

#include "sevsyn/csv.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/evidence_io.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

namespace fs = std::filesystem;

struct Inputs {
  AgeGrid grid;
  AgeAggregation agg;
  std::vector<EvidenceItem> evidence;
  std::optional<SentinelSeries> sentinel;
  std::optional<TransferPriors> transfer;
};

void require_file(const fs::path& p, const std::string& key) {
  if (!fs::is_regular_file(p)) throw ConfigError(key + ": file not found: " + p.string());
}

Inputs load_inputs(const RunConfig& cfg) {
  auto grid = cfg.grid();
  auto agg = cfg.aggregation_for(grid);
  Inputs in{grid, agg, {}, std::nullopt, std::nullopt};
  if (!cfg.evidence.empty()) {
    require_file(cfg.evidence, "data.evidence");
    in.evidence = load_evidence(cfg.evidence, grid, agg);
  }
  if (!cfg.sentinel.empty()) {
    require_file(cfg.sentinel, "data.sentinel");
    auto series = load_sentinel(cfg.sentinel);
    if (cfg.restrict_positivity) series = restrict_positivity(series, cfg.max_swab_delay);
    for (const auto& label : series.ages()) {
      const auto a = grid.index_of(label);
      if (!a) throw ConfigError("sentinel age band '" + label + "' is not in the age grid");
      if (!cfg.propensity[*a]) throw ConfigError("no propensity for sentinel age band '" + label + "'");
    }
    in.sentinel = std::move(series);
  } else if (cfg.restrict_positivity) {
    throw ConfigError("positivity restriction requested without data.sentinel");
  }
  const bool wants_transfer = !cfg.transfer.empty() || !cfg.stage1_summary.empty();
  if (cfg.mode == RunMode::B) {
    if (!cfg.transfer.empty()) {
      require_file(cfg.transfer, "data.transfer");
      in.transfer = load_transfer(cfg.transfer);
    } else if (!cfg.stage1_summary.empty()) {
      require_file(cfg.stage1_summary, "data.stage1_summary");
      in.transfer = two_stage_transfer(load_summary(cfg.stage1_summary), grid);
    } else {
      throw ConfigError("variant B needs data.transfer or data.stage1_summary");
    }
  } else if (wants_transfer) {
    throw ConfigError("data.transfer and data.stage1_summary apply to variant B only");
  }
  if (cfg.sensitivity_prior && cfg.mode != RunMode::A && cfg.mode != RunMode::TwoStage)
    throw ConfigError("prior.sensitivity applies to variant A (or stage one of two-stage)");
  return in;
}

SymptomaticPriors symptomatic_priors(const RunConfig& cfg, const SentinelSeries& series, const AgeGrid& grid) {
  SymptomaticPriors p;
  p.interaction = cfg.interaction;
  for (const auto& label : series.ages()) p.propensity.push_back(*cfg.propensity[*grid.index_of(label)]);
  return p;
}

// Placeholder wave-3 summaries, used to check band binding before the
// sentinel fit exists.
std::vector<EvidenceItem> placeholder_symptomatic(const SentinelSeries& series) {
  std::vector<SymptomaticSummaryRow> rows;
  for (const auto& label : series.ages()) rows.push_back({label, 0.0, 1.0, 0.0, false});
  return symptomatic_evidence(rows);
}

ModelSpec make_spec(Variant v, const RunConfig& cfg, const Inputs& in, std::span<const EvidenceItem> extra,
                    const std::optional<TransferPriors>& transfer, bool strict) {
  ModelSpec spec(v, in.grid);
  spec.aggregation = in.agg;
  spec.evidence = evidence_for(v, in.evidence);
  if (v != Variant::A) spec.evidence.insert(spec.evidence.end(), extra.begin(), extra.end());
  if (transfer) {
    const auto overrides = transfer->overrides();
    for (const auto& [k, p] : overrides.entries()) spec.priors.set(k, p);
  }
  for (const auto& [k, p] : cfg.priors.entries()) spec.priors.set(k, p);
  if (v == Variant::A && cfg.sensitivity_prior) spec.priors.set("iar", sensitivity_prior(*cfg.sensitivity_prior));
  spec.linked_pairs = cfg.linked_pairs;
  spec.strict_priors = strict;
  return spec;
}

// Stand-in for the transfer before stage one has run. Quantity names and
// evidence binding do not depend on the transferred values.
TransferPriors flat_transfer(const AgeGrid& grid) {
  TransferPriors flat;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    TransferEntry e;
    e.parameter = quantity_name("prev", std::nullopt, a);
    e.prior = DirichletSpec{{1.0, 1.0, 1.0}, {}};
    flat.entries.push_back(e);
  }
  return flat;
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  SplitMix64 sm(master ^ (0x5851f42d4c957f2dULL * stream));
  return sm.next();
}

struct StagePlan {
  std::string name;
  Variant variant;
  std::vector<std::string> monitor;
  std::vector<ComparePair> pairs;
};

bool has_wave(const SeverityModel& m, int w) {
  return std::find(m.waves().begin(), m.waves().end(), w) != m.waves().end();
}

std::vector<std::string> matching(const SeverityModel& m, std::span<const std::string> patterns) {
  std::vector<std::string> out;
  for (const auto& n : m.quantity_names())
    if (std::any_of(patterns.begin(), patterns.end(), [&](const auto& p) { return text::wildcard_match(p, n); }))
      out.push_back(n);
  return out;
}

// Assigns monitor names and comparisons to stages, checking every pattern
// and pair is served by some stage.
std::vector<StagePlan> plan_stages(const RunConfig& cfg, const std::vector<const SeverityModel*>& models,
                                   const std::vector<std::pair<std::string, Variant>>& names) {
  std::vector<StagePlan> plans;
  for (std::size_t s = 0; s < models.size(); ++s)
    plans.push_back({names[s].first, names[s].second, matching(*models[s], cfg.monitor), {}});
  for (const auto& pattern : cfg.monitor) {
    const bool used = std::any_of(models.begin(), models.end(), [&](const SeverityModel* m) {
      const auto& q = m->quantity_names();
      return std::any_of(q.begin(), q.end(), [&](const auto& n) { return text::wildcard_match(pattern, n); });
    });
    if (!used) throw ConfigError("monitor pattern '" + pattern + "' matches no quantity");
  }
  for (const auto& pair : cfg.compare) {
    bool served = false;
    for (std::size_t s = 0; s < models.size(); ++s) {
      if (!has_wave(*models[s], pair.wave_from) || !has_wave(*models[s], pair.wave_to)) continue;
      const auto& mon = plans[s].monitor;
      std::vector<std::string> needed;
      for (std::size_t a = 0; a < models[s]->grid().size(); ++a) {
        needed.push_back(quantity_name(pair.symbol, pair.wave_from, a));
        needed.push_back(quantity_name(pair.symbol, pair.wave_to, a));
      }
      needed.push_back(quantity_name_all(pair.symbol, pair.wave_from));
      needed.push_back(quantity_name_all(pair.symbol, pair.wave_to));
      for (const auto& n : needed)
        if (std::find(mon.begin(), mon.end(), n) == mon.end())
          throw ConfigError("comparison needs quantity '" + n + "', which is not monitored");
      plans[s].pairs.push_back(pair);
      served = true;
    }
    if (!served)
      throw ConfigError("comparison " + pair.symbol + ":" + std::to_string(pair.wave_from) + ":" +
                        std::to_string(pair.wave_to) + " spans waves no single fitted model contains");
  }
  return plans;
}

std::vector<std::pair<std::string, Variant>> stage_names(RunMode mode) {
  switch (mode) {
    case RunMode::A: return {{"A", Variant::A}};
    case RunMode::B: return {{"B", Variant::B}};
    case RunMode::C: return {{"C", Variant::C}};
    case RunMode::TwoStage: return {{"stage1", Variant::A}, {"stage2", Variant::B}};
  }
  return {};
}

void check_prior_keys(const RunConfig& cfg, const std::vector<const SeverityModel*>& models) {
  std::vector<std::string> names;
  for (const auto* m : models)
    for (const auto& p : m->priors().parameters()) names.push_back(p.name);
  if (const auto unused = cfg.priors.unused(names); !unused.empty())
    throw ConfigError("prior key '" + unused.front() + "' matches no basic parameter of the fitted variants");
}

StageResult run_stage(const StagePlan& plan, const SeverityModel& model, const RunProtocol& protocol,
                      std::span<const std::uint64_t> seeds, const std::vector<std::string>& labels) {
  StageResult st;
  st.name = plan.name;
  st.variant = plan.variant;
  st.warnings = model.warnings();
  st.manifest = model.manifest();
  st.run = run(model, protocol, seeds);
  st.draws = functional_report(model, st.run, plan.monitor);
  st.summary = summarize(st.draws);
  st.compare = compare_waves(st.draws, plan.pairs, labels);
  return st;
}

void write_manifest(const fs::path& path, std::span<const ManifestRow> rows) {
  CsvWriter out(path);
  out.row({"parameter", "transform", "prior", "dimension"});
  for (const auto& r : rows) out.row({r.name, r.transform, r.prior, std::to_string(r.dimension)});
}

void write_diagnostics(const fs::path& path, const RunResult& run) {
  CsvWriter out(path);
  out.row({"chain", "seed", "block", "acceptance_rate", "scale_at_burn_in", "final_scale"});
  for (std::size_t c = 0; c < run.chains.size(); ++c) {
    const auto& ch = run.chains[c];
    for (std::size_t b = 0; b < run.blocks.size(); ++b)
      out.row({std::to_string(c + 1), std::to_string(ch.seed), run.blocks[b].name,
               text::format_double(ch.acceptance_rates[b]), text::format_double(ch.scales_at_burn_in[b]),
               text::format_double(ch.final_scales[b])});
  }
}

void write_stage(const StageResult& st, const fs::path& dir, const std::vector<std::string>& labels) {
  fs::create_directories(dir);
  write_summary(dir / "summary.csv", st.summary);
  write_compare(dir / "compare.csv", st.compare);
  write_manifest(dir / "manifest.csv", st.manifest);
  write_diagnostics(dir / "diagnostics.csv", st.run);
  write_draws(dir, st.draws);
  write_plotdata(dir / "plotdata", st.summary, labels);
  if (!st.warnings.empty()) {
    std::ofstream out(dir / "warnings.txt");
    for (const auto& w : st.warnings) out << w << '\n';
  }
}

}  // namespace

std::vector<EvidenceItem> evidence_for(Variant variant, std::span<const EvidenceItem> evidence) {
  std::vector<EvidenceItem> out;
  for (const auto& e : evidence) {
    const bool sero = e.kind == EvidenceKind::SeroSample;
    bool keep = false;
    switch (variant) {
      case Variant::A: keep = e.wave == 1 || e.wave == 2 || (sero && e.wave == 0); break;
      case Variant::B: keep = e.wave == 3; break;
      case Variant::C: keep = true; break;
    }
    if (keep) out.push_back(e);
  }
  return out;
}

std::vector<EvidenceItem> symptomatic_evidence(std::span<const SymptomaticSummaryRow> rows) {
  std::vector<EvidenceItem> out;
  for (const auto& r : rows) {
    EvidenceItem e;
    e.kind = EvidenceKind::NormalLogCount;
    e.wave = 3;
    e.band = r.age_band;
    e.level = SeverityLevel::S;
    e.mean_log = r.mean_log;
    e.sd_log = r.sd_log;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
  cfg.protocol.validate();
  const auto in = load_inputs(cfg);
  const std::vector<EvidenceItem> extra = in.sentinel ? placeholder_symptomatic(*in.sentinel)
                                                      : std::vector<EvidenceItem>{};
  const bool two = cfg.mode == RunMode::TwoStage;
  const auto transfer = two ? std::optional(flat_transfer(in.grid)) : in.transfer;
  std::vector<std::unique_ptr<SeverityModel>> models;
  const auto names = stage_names(cfg.mode);
  for (const auto& [name, variant] : names)
    models.push_back(std::make_unique<SeverityModel>(
        make_spec(variant, cfg, in, extra, variant == Variant::B ? transfer : std::nullopt, !two)));
  std::vector<const SeverityModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(m.get());
  if (two) check_prior_keys(cfg, ptrs);
  plan_stages(cfg, ptrs, names);
  std::vector<std::string> warnings;
  if (in.sentinel && cfg.mode == RunMode::A) warnings.push_back("data.sentinel is not used by variant A");
  for (std::size_t s = 0; s < models.size(); ++s)
    for (const auto& w : models[s]->warnings()) warnings.push_back(names[s].first + ": " + w);
  return warnings;
}

PipelineResult execute(const RunConfig& cfg, std::ostream* progress) {
  validate_config(cfg);
  const auto in = load_inputs(cfg);
  PipelineResult result;
  result.age_labels = in.grid.labels();
  const auto& protocol = cfg.protocol;
  const std::size_t chains = protocol.n_chains;
  auto log = [&](const std::string& line) {
    if (progress) *progress << line << std::endl;
  };

  std::vector<EvidenceItem> extra;
  if (in.sentinel && cfg.mode == RunMode::A) {
    log("data.sentinel informs wave 3 only; variant A does not use it");
  } else if (in.sentinel) {
    log("symptomatic submodel: " + std::to_string(in.sentinel->n_weeks()) + " weeks");
    const auto fit = estimate_symptomatic(*in.sentinel, symptomatic_priors(cfg, *in.sentinel, in.grid), in.grid,
                                          protocol, derive_seeds(stream_seed(cfg.seed, 3), chains));
    result.symptomatic = fit.summary;
    extra = symptomatic_evidence(fit.summary);
  }

  const bool two = cfg.mode == RunMode::TwoStage;
  const auto names = stage_names(cfg.mode);
  auto describe_stage = [&](const std::string& name, const SeverityModel& m) {
    log("stage " + name + ": variant " + std::string(to_string(m.variant())) + ", " +
        std::to_string(m.dimension()) + " parameters, " + std::to_string(chains) + " chains x " +
        std::to_string(protocol.n_iterations) + " iterations");
  };

  if (!two) {
    const SeverityModel model(make_spec(names[0].second, cfg, in, extra, in.transfer, true));
    const auto plan = plan_stages(cfg, {&model}, names).front();
    describe_stage(plan.name, model);
    result.stages.push_back(run_stage(plan, model, protocol, derive_seeds(cfg.seed, chains), result.age_labels));
    result.transfer = in.transfer;
    return result;
  }

  // Stage one uses the same seeds as a standalone variant-A run.
  const SeverityModel first(make_spec(Variant::A, cfg, in, extra, std::nullopt, false));
  const SeverityModel stand_in(make_spec(Variant::B, cfg, in, extra, flat_transfer(in.grid), false));
  const auto plans = plan_stages(cfg, {&first, &stand_in}, names);
  describe_stage(names[0].first, first);
  result.stages.push_back(run_stage(plans[0], first, protocol, derive_seeds(cfg.seed, chains), result.age_labels));

  std::vector<std::string> sources;
  for (std::size_t a = 0; a < in.grid.size(); ++a)
    for (const char* sym : {"prev", "c_s_inf", "c_h_s", "c_i_h", "c_d_h"}) sources.push_back(quantity_name(sym, 2, a));
  const auto stage1 = summarize(functional_report(first, result.stages.front().run, sources));
  result.transfer = two_stage_transfer(stage1, in.grid);

  const SeverityModel second(make_spec(Variant::B, cfg, in, extra, result.transfer, false));
  describe_stage(names[1].first, second);
  result.stages.push_back(run_stage(plans[1], second, protocol, derive_seeds(stream_seed(cfg.seed, 2), chains),
                                    result.age_labels));
  return result;
}

void write_draws(const fs::path& dir, const DrawTable& draws) {
  const auto sub = dir / "draws";
  fs::create_directories(sub);
  std::vector<std::string> header{"draw"};
  header.insert(header.end(), draws.names.begin(), draws.names.end());
  const std::size_t n = draws.draws_per_chain();
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    CsvWriter out(sub / ("chain-" + std::to_string(c + 1) + ".csv"));
    out.row(header);
    std::vector<std::string> row(header.size());
    for (std::size_t i = 0; i < n; ++i) {
      row[0] = std::to_string(i + 1);
      for (std::size_t q = 0; q < draws.n_quantities(); ++q) row[q + 1] = text::format_double(draws.at(c, i, q));
      out.row(row);
    }
  }
}

DrawTable load_draws(const fs::path& dir) {
  DrawTable out;
  const auto sub = dir / "draws";
  for (std::size_t c = 1;; ++c) {
    const auto path = sub / ("chain-" + std::to_string(c) + ".csv");
    if (!fs::is_regular_file(path)) break;
    const auto table = read_csv(path);
    std::vector<std::string> names(table.header().begin() + 1, table.header().end());
    if (table.header().empty() || table.header().front() != "draw")
      throw DataError(table.source(), 1, "first column must be 'draw'");
    if (c == 1) out.names = names;
    else if (names != out.names) throw DataError(table.source(), 1, "columns differ from chain-1.csv");
    std::vector<double> values;
    for (const auto& r : table.rows())
      for (std::size_t q = 1; q < r.fields.size(); ++q) {
        const auto v = text::to_double(r.fields[q]);
        if (!v) throw DataError(table.source(), r.line, "cannot parse '" + r.fields[q] + "'");
        values.push_back(*v);
      }
    if (c > 1 && values.size() != out.chains.front().size())
      throw DataError(table.source(), 1, "chain length differs from chain-1.csv");
    out.chains.push_back(std::move(values));
  }
  if (out.chains.empty()) throw ConfigError("no draw files in " + sub.string());
  return out;
}

void write_outputs(const PipelineResult& result, const fs::path& dir) {
  const auto& labels = result.age_labels;
  if (result.stages.size() == 1) {
    write_stage(result.stages.front(), dir, labels);
  } else {
    PosteriorSummary all;
    std::vector<CompareRow> compare;
    for (const auto& st : result.stages) {
      write_stage(st, dir / st.name, labels);
      all.rows.insert(all.rows.end(), st.summary.rows.begin(), st.summary.rows.end());
      compare.insert(compare.end(), st.compare.begin(), st.compare.end());
    }
    write_summary(dir / "summary.csv", all);
    write_compare(dir / "compare.csv", compare);
  }
  if (result.transfer) write_transfer(dir / "transfer.csv", *result.transfer);
  if (!result.symptomatic.empty()) write_symptomatic_summary(dir / "symptomatic.csv", result.symptomatic);
}

PipelineResult run_pipeline(const RunConfig& cfg, std::ostream* progress) {
  if (cfg.output.empty()) throw ConfigError("no output directory (run.output or --output)");
  if (fs::exists(cfg.output)) throw ConfigError("output directory already exists: " + cfg.output.string());
  auto result = execute(cfg, progress);
  const fs::path partial = cfg.output.string() + ".partial";
  fs::remove_all(partial);
  try {
    fs::create_directories(partial);
    write_outputs(result, partial);
    fs::rename(partial, cfg.output);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(partial, ec);
    throw;
  }
  return result;
}

}  // namespace sevsyn
