// Command-line entry point: validate, simulate, fit, transfer, compare, report.
//
// Exit status: 0 on success, 2 for configuration or data errors, 3 when the
// sampler aborts, 1 otherwise.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sevsyn/errors.hpp"
#include "sevsyn/evidence_io.hpp"
#include "sevsyn/pipeline.hpp"
#include "sevsyn/text.hpp"

namespace fs = std::filesystem;
using namespace sevsyn;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string variant;
  std::string sensitivity;
  bool restrict_positivity = false;
  std::string input;
  std::vector<std::string> pairs;
};

RunConfig resolve(const Options& o, bool config_required) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  else if (config_required) throw ConfigError("--config is required");
  if (o.seed) cfg.seed = *o.seed;
  if (!o.output.empty()) cfg.output = o.output;
  if (!o.variant.empty()) cfg.mode = parse_run_mode(o.variant);
  if (!o.sensitivity.empty()) {
    sensitivity_prior(o.sensitivity);
    cfg.sensitivity_prior = o.sensitivity;
  }
  if (o.restrict_positivity) cfg.restrict_positivity = true;
  for (const auto& p : o.pairs) cfg.compare.push_back(parse_compare_pair(p));
  return cfg;
}

std::vector<std::string> age_labels(const RunConfig& cfg) { return cfg.grid_labels; }

fs::path output_dir(const RunConfig& cfg) {
  if (cfg.output.empty()) throw ConfigError("--output is required");
  fs::create_directories(cfg.output);
  return cfg.output;
}

int cmd_validate(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto warnings = validate_config(cfg);
  for (const auto& w : warnings) std::cout << "warning: " << w << '\n';
  std::cout << "ok: variant " << to_string(cfg.mode) << '\n';
  return 0;
}

// A config that fits the simulated files with the scenario's detection priors.
void write_fit_config(const fs::path& path, const RunConfig& cfg, const Scenario& sc, bool sentinel,
                      const SentinelScenario* sentinel_truth) {
  std::ofstream out(path);
  const auto& ws = sc.waves();
  const bool has12 = std::find(ws.begin(), ws.end(), 1) != ws.end() && std::find(ws.begin(), ws.end(), 2) != ws.end();
  const bool has3 = std::find(ws.begin(), ws.end(), 3) != ws.end();
  out << "# Fits the simulated data; detection priors are centred on the generating values.\n";
  out << "run.variant = " << (has3 ? "C" : "A") << '\n';
  out << "run.seed = " << cfg.seed << '\n';
  const auto& pr = cfg.protocol;
  out << "run.chains = " << pr.n_chains << "\nrun.iterations = " << pr.n_iterations << "\nrun.burn_in = " << pr.burn_in
      << "\nrun.thin = " << pr.thin << "\nrun.adapt_window = " << pr.adapt_window << '\n';
  std::string labels, pops;
  for (std::size_t a = 0; a < sc.grid.size(); ++a) {
    labels += (a ? ", " : "") + sc.grid.label(a);
    pops += (a ? ", " : "") + text::format_double(sc.grid.population(a));
  }
  out << "grid.labels = " << labels << '\n' << "grid.population = " << pops << '\n';
  if (sc.aggregation)
    for (auto level : kAllLevels) {
      if (!sc.aggregation->has_level(level)) continue;
      const auto& bands = sc.aggregation->bands(level);
      bool identity = true;
      for (std::size_t b = 0; b < bands.size(); ++b)
        identity = identity && bands[b].members.size() == 1 && bands[b].members[0] == b && bands.size() == sc.grid.size();
      if (identity) continue;
      out << "aggregate." << to_string(level) << " = ";
      for (std::size_t b = 0; b < bands.size(); ++b) {
        out << (b ? "; " : "") << bands[b].name << ":";
        for (std::size_t m = 0; m < bands[b].members.size(); ++m)
          out << (m ? " |" : "") << ' ' << sc.grid.label(bands[b].members[m]);
      }
      out << '\n';
    }
  out << "data.evidence = evidence.csv\n" << "data.truth = truth.csv\n";
  if (sentinel && sentinel_truth) {
    out << "data.sentinel = sentinel.csv\n" << "submodel.propensity = ";
    for (std::size_t a = 0; a < sentinel_truth->truth.propensity.size(); ++a)
      out << (a ? ", " : "") << text::format_double(sentinel_truth->truth.propensity[a]);
    out << '\n';
  }
  if (has12) out << "compare.pairs = cfr:1:2, iar:1:2\n";
  const auto priors = detection_priors(sc, cfg.sim.detection_prior_sd);
  for (const auto& [key, prior] : priors.entries())
    out << "prior." << key << " = " << describe(prior) << '\n';
}

int cmd_simulate(const Options& o) {
  const auto cfg = resolve(o, false);
  auto sc = scenario_from_config(cfg);
  // The sentinel fit replaces direct wave-3 N_S evidence.
  if (cfg.sim.sentinel) sc.design.symptomatic_logcount_waves.clear();
  const auto dir = output_dir(cfg);
  const auto data = generate(sc);
  write_evidence(dir / "evidence.csv", data.evidence);
  write_truth(dir / "truth.csv", data.truth);
  const bool has3 = std::find(sc.waves().begin(), sc.waves().end(), 3) != sc.waves().end();
  std::optional<SentinelScenario> sentinel;
  if (cfg.sim.sentinel) {
    if (!has3) throw ConfigError("sim.sentinel needs wave 3 in sim.waves");
    sentinel = matched_sentinel(sc, SplitMix64(sc.seed).next());
    write_sentinel(dir / "sentinel.csv", generate_sentinel(*sentinel).series);
  }
  write_fit_config(dir / "fit.conf", cfg, sc, cfg.sim.sentinel, sentinel ? &*sentinel : nullptr);
  std::cout << "wrote " << data.evidence.size() << " evidence items to " << (dir / "evidence.csv").string() << '\n';
  return 0;
}

int cmd_fit(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto result = run_pipeline(cfg, &std::cerr);
  for (const auto& st : result.stages)
    for (const auto& w : st.warnings) std::cerr << "warning: " << st.name << ": " << w << '\n';
  std::cout << "wrote " << cfg.output.string() << '\n';
  return 0;
}

int cmd_transfer(const Options& o) {
  const auto cfg = resolve(o, true);
  if (o.input.empty()) throw ConfigError("--input (a variant-A summary.csv) is required");
  if (!fs::is_regular_file(o.input)) throw ConfigError("--input: file not found: " + o.input);
  const auto transfer = two_stage_transfer(load_summary(o.input), cfg.grid());
  const auto dir = output_dir(cfg);
  write_transfer(dir / "transfer.csv", transfer);
  std::cout << "wrote " << (dir / "transfer.csv").string() << '\n';
  return 0;
}

int cmd_compare(const Options& o) {
  const auto cfg = resolve(o, false);
  if (o.input.empty()) throw ConfigError("--input (a fit output directory) is required");
  if (cfg.compare.empty()) throw ConfigError("no comparisons (compare.pairs or --pair)");
  const auto draws = load_draws(o.input);
  const auto rows = compare_waves(draws, cfg.compare, age_labels(cfg));
  const auto dir = output_dir(cfg);
  write_compare(dir / "compare.csv", rows);
  std::cout << "wrote " << (dir / "compare.csv").string() << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  const auto cfg = resolve(o, false);
  if (o.input.empty()) throw ConfigError("--input (a fit output directory) is required");
  const auto draws = load_draws(o.input);
  const auto summary = summarize(draws);
  const auto dir = output_dir(cfg);
  write_summary(dir / "summary.csv", summary);
  write_plotdata(dir / "plotdata", summary, age_labels(cfg));
  if (!cfg.truth.empty()) {
    const auto truth = load_truth(cfg.truth);
    const auto report = recovery_report(truth, summary, cfg.monitor);
    CsvWriter out(dir / "coverage.csv");
    out.row({"quantity", "truth", "lo", "hi", "covered"});
    for (const auto& r : report.rows)
      out.row({r.quantity, text::format_double(r.truth), text::format_double(r.lo), text::format_double(r.hi),
               r.covered ? "1" : "0"});
    std::cout << "coverage " << report.covered() << "/" << report.rows.size() << '\n';
  }
  std::cout << "wrote " << (dir / "summary.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Severity estimation by evidence synthesis across epidemic waves"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--output", o.output, "output directory");
  };
  auto model_flags = [&](CLI::App* sub) {
    sub->add_option("--variant", o.variant, "A, B, C or two-stage")
        ->check(CLI::IsMember({"A", "B", "C", "two-stage"}));
    sub->add_option("--sensitivity-prior", o.sensitivity, "flat, d226, d267_133 or d133_267");
    sub->add_flag("--restrict-positivity", o.restrict_positivity,
                  "use swabs within submodel.max_swab_delay days of consultation");
  };

  auto* validate = app.add_subcommand("validate", "check a configuration and its inputs without sampling");
  common(validate);
  model_flags(validate);
  auto* simulate = app.add_subcommand("simulate", "write synthetic evidence, truth and a matching fit config");
  common(simulate);
  auto* fit = app.add_subcommand("fit", "sample the posterior and write the output bundle");
  common(fit);
  model_flags(fit);
  auto* transfer = app.add_subcommand("transfer", "variant-B priors from a variant-A summary");
  common(transfer);
  transfer->add_option("--input", o.input, "variant-A summary.csv");
  auto* compare = app.add_subcommand("compare", "cross-wave probabilities from saved draws");
  common(compare);
  compare->add_option("--input", o.input, "fit output directory");
  compare->add_option("--pair", o.pairs, "symbol:wave_from:wave_to");
  auto* report = app.add_subcommand("report", "summary, plot data and coverage from saved draws");
  common(report);
  report->add_option("--input", o.input, "fit output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (validate->parsed()) return cmd_validate(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (transfer->parsed()) return cmd_transfer(o);
    if (compare->parsed()) return cmd_compare(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "sevsyn: error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "sevsyn: error: " << e.what() << '\n';
    return 2;
  } catch (const SamplerError& e) {
    std::cerr << "sevsyn: sampler error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "sevsyn: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
