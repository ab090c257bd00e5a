#pragma once

// Run configuration and the fitting pipeline behind the command-line tool.
//
// Configuration is flat `key = value` text, one pair per line, '#' starting
// a comment. Unknown keys are errors. Relative paths resolve against the
// directory of the config file.
//
//   run.variant            A, B, C or two-stage
//   run.seed               master seed
//   run.protocol           desk (default) or full; then optionally
//   run.chains, run.iterations, run.burn_in, run.thin, run.adapt_window, run.parallel
//   run.output             output directory, which must not exist yet
//   run.monitor            comma-separated quantity patterns ('*' wildcard)
//   grid.labels            fine age bands (default: the seven standard bands)
//   grid.population        one population per band
//   aggregate.<level>      coarse bands, "name: label | label; name: label"
//   data.evidence          evidence CSV
//   data.sentinel          sentinel CSV; its fit adds wave-3 N_S summaries
//   data.transfer          transfer CSV (variant B)
//   data.stage1_summary    variant-A summary to build the transfer from (variant B)
//   data.truth             truth CSV, for coverage in `report`
//   prior.<path>           prior for every basic parameter under <path>
//   prior.sensitivity      named attack-rate prior (variant A, stage one)
//   link.pairs             wave-3 pairs linked to wave 2 in variant C
//   compare.pairs          comma-separated symbol:wave_from:wave_to
//   submodel.propensity    fixed per-band propensities, comma-separated
//   submodel.propensity.aA prior for one band's propensity
//   submodel.interaction   0 or 1
//   submodel.restrict_positivity  0 or 1; submodel.max_swab_delay days (default 5)
//   sim.waves, sim.sentinel, sim.detection_prior_sd, sim.seed
//   truth.<symbol>.wW[.aA] generating values replacing the desk scenario's
//   design.<field>         EvidenceDesign fields, e.g. design.sero_sample_size

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sevsyn/models.hpp"
#include "sevsyn/report.hpp"
#include "sevsyn/simgen.hpp"
#include "sevsyn/symptomatic.hpp"

namespace sevsyn {

enum class RunMode { A, B, C, TwoStage };

RunMode parse_run_mode(std::string_view text);
std::string_view to_string(RunMode mode);

/// Attack rates and severity risks per age and for all ages.
std::vector<std::string> default_monitor();

using BandDeclaration = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct SimulationSettings {
  std::vector<int> waves{1, 2, 3};
  std::optional<std::uint64_t> seed;  // run.seed when unset
  bool sentinel = false;
  double detection_prior_sd = 0.15;  // relative to the true value
  std::vector<std::pair<std::string, double>> truth;
  std::vector<std::pair<std::string, std::string>> design;
};

struct RunConfig {
  std::filesystem::path source;  // config file; empty when built in code
  RunMode mode = RunMode::C;
  std::uint64_t seed = 1;
  RunProtocol protocol = RunProtocol::desk();
  std::filesystem::path output;
  std::vector<std::string> monitor = default_monitor();

  std::vector<std::string> grid_labels = AgeGrid::standard_labels();
  std::vector<double> grid_population;
  std::vector<std::pair<SeverityLevel, BandDeclaration>> aggregation;

  std::filesystem::path evidence;
  std::filesystem::path sentinel;
  std::filesystem::path transfer;
  std::filesystem::path stage1_summary;
  std::filesystem::path truth;

  PriorOverrides priors;
  std::optional<std::string> sensitivity_prior;
  std::vector<std::string> linked_pairs = kLinkablePairs;
  std::vector<ComparePair> compare;

  std::vector<std::optional<PriorSpec>> propensity;  // per band; empty entries are unset
  bool interaction = false;
  bool restrict_positivity = false;
  double max_swab_delay = 5;

  SimulationSettings sim;

  /// Throws ConfigError when grid.population is missing or mismatched.
  AgeGrid grid() const;
  AgeAggregation aggregation_for(const AgeGrid& grid) const;
};

RunConfig parse_config(std::string_view text, const std::string& source_name,
                       const std::filesystem::path& base_dir);
/// Throws ConfigError naming the path when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Evidence a variant can bind: items on its waves, plus sero samples at
/// timepoint 0 (A, C). Variant B keeps wave-3 items only.
std::vector<EvidenceItem> evidence_for(Variant variant, std::span<const EvidenceItem> evidence);

/// Wave-3 NormalLogCount items of N_S, one per summary row.
std::vector<EvidenceItem> symptomatic_evidence(std::span<const SymptomaticSummaryRow> rows);

struct StageResult {
  std::string name;  // "A", "B", "C", or "stage1"/"stage2"
  Variant variant = Variant::C;
  std::vector<std::string> warnings;
  std::vector<ManifestRow> manifest;
  RunResult run;
  DrawTable draws;
  PosteriorSummary summary;
  std::vector<CompareRow> compare;
};

struct PipelineResult {
  std::vector<StageResult> stages;
  std::optional<TransferPriors> transfer;
  std::vector<SymptomaticSummaryRow> symptomatic;
  std::vector<std::string> age_labels;
};

/// Loads every input and builds every model without sampling. Returns
/// completeness warnings; throws ConfigError or DataError.
std::vector<std::string> validate_config(const RunConfig& config);

/// Validates, then samples every stage. `progress` receives one line per
/// stage when non-null.
PipelineResult execute(const RunConfig& config, std::ostream* progress = nullptr);

/// Writes the bundle into `dir` (which must exist):
///   summary.csv, compare.csv, manifest.csv, diagnostics.csv, draws/chain-k.csv, plotdata/
/// and, for two-stage runs, stage1/ and stage2/ with the same files plus
/// transfer.csv; symptomatic.csv when a sentinel series was fitted.
void write_outputs(const PipelineResult& result, const std::filesystem::path& dir);

/// execute + write_outputs into `<output>.partial`, renamed to `output` only
/// on success. Nothing is created when validation fails.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* progress = nullptr);

/// Draw files written by write_outputs.
void write_draws(const std::filesystem::path& dir, const DrawTable& draws);
DrawTable load_draws(const std::filesystem::path& dir);

/// Scenario described by the sim.*, truth.* and design.* keys, starting
/// from desk_scenario(sim.waves, seed).
Scenario scenario_from_config(const RunConfig& config);

}  // namespace sevsyn
