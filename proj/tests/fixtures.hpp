#pragma once

// Synthetic inputs on disk plus a matching configuration, for pipeline runs.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sevsyn/evidence_io.hpp"
#include "sevsyn/pipeline.hpp"
#include "sevsyn/simgen.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn::testing {

struct Fixture {
  std::filesystem::path dir;
  Scenario scenario;
  GeneratedData data;
};

/// Writes evidence.csv and truth.csv for desk_scenario(waves, seed) into `dir`.
inline Fixture make_fixture(const std::filesystem::path& dir, const std::vector<int>& waves, std::uint64_t seed) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto sc = desk_scenario(waves, seed);
  auto data = generate(sc);
  write_evidence(dir / "evidence.csv", data.evidence);
  write_truth(dir / "truth.csv", data.truth);
  return {dir, std::move(sc), std::move(data)};
}

struct ConfigOptions {
  std::string variant = "C";
  std::uint64_t seed = 1;
  std::size_t iterations = 600;
  std::size_t burn_in = 200;
  std::size_t thin = 4;
  std::size_t chains = 2;
  std::vector<int> prior_waves{1, 2, 3};  // waves whose detection priors are written
  std::vector<std::string> extra;
};

inline std::string config_text(const Fixture& fx, const ConfigOptions& o) {
  const auto& sc = fx.scenario;
  std::ostringstream out;
  out << "run.variant = " << o.variant << "\nrun.seed = " << o.seed << "\nrun.iterations = " << o.iterations
      << "\nrun.burn_in = " << o.burn_in << "\nrun.thin = " << o.thin << "\nrun.chains = " << o.chains
      << "\nrun.parallel = 0\n";
  out << "grid.labels = ";
  for (std::size_t a = 0; a < sc.grid.size(); ++a) out << (a ? ", " : "") << sc.grid.label(a);
  out << "\ngrid.population = ";
  for (std::size_t a = 0; a < sc.grid.size(); ++a) out << (a ? ", " : "") << text::format_double(sc.grid.population(a));
  out << '\n';
  if (sc.aggregation && sc.aggregation->has_level(SeverityLevel::I)) {
    out << "aggregate.I = ";
    const auto& bands = sc.aggregation->bands(SeverityLevel::I);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      out << (b ? "; " : "") << bands[b].name << ":";
      for (std::size_t m = 0; m < bands[b].members.size(); ++m)
        out << (m ? " |" : "") << ' ' << sc.grid.label(bands[b].members[m]);
    }
    out << '\n';
  }
  out << "data.evidence = " << (fx.dir / "evidence.csv").string() << '\n';
  const auto priors = detection_priors(sc, 0.15);
  for (const auto& [key, prior] : priors.entries()) {
    bool keep = false;
    for (int w : o.prior_waves) keep = keep || key.find(".w" + std::to_string(w)) != std::string::npos;
    if (keep) out << "prior." << key << " = " << describe(prior) << '\n';
  }
  for (const auto& line : o.extra) out << line << '\n';
  return out.str();
}

inline RunConfig fixture_config(const Fixture& fx, const ConfigOptions& o, const std::filesystem::path& output) {
  auto cfg = parse_config(config_text(fx, o), "fixture.conf", fx.dir);
  cfg.output = output;
  return cfg;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sevsyn::testing
