#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sevsyn/errors.hpp"
#include "sevsyn/pipeline.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const auto line = it == entries_.end() ? 0 : it->second.line;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + key + ": " + what);
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    seen_.push_back(key);
    return it->second.value;
  }

  template <typename F>
  void with(const std::string& key, F&& f) {
    if (const auto v = take(key)) {
      try {
        f(*v);
      } catch (const ConfigError& e) {
        fail(key, e.what());
      }
    }
  }

  /// Keys under `prefix` not yet consumed, in file order of their names.
  std::vector<std::pair<std::string, std::string>> take_prefix(const std::string& prefix) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, e] : entries_)
      if (text::starts_with(k, prefix) && std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        out.emplace_back(k.substr(prefix.size()), e.value);
        seen_.push_back(k);
      }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, e] : entries_)
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
  }

 private:
  std::map<std::string, Entry> entries_;
  std::vector<std::string> seen_;
  std::string source_;
};

std::uint64_t parse_u64(const std::string& v) {
  const auto x = text::to_uint(v);
  if (!x) throw ConfigError("expected a nonnegative integer, got '" + v + "'");
  return *x;
}

std::size_t parse_size(const std::string& v) { return static_cast<std::size_t>(parse_u64(v)); }

double parse_number(const std::string& v) {
  const auto x = text::to_double(v);
  if (!x) throw ConfigError("expected a number, got '" + v + "'");
  return *x;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("expected 0 or 1, got '" + v + "'");
}

std::vector<double> parse_numbers(const std::string& v) {
  std::vector<double> out;
  for (const auto& f : text::split_list(v)) out.push_back(parse_number(f));
  return out;
}

std::vector<int> parse_ints(const std::string& v) {
  std::vector<int> out;
  for (const auto& f : text::split_list(v)) {
    const auto x = text::to_int(f);
    if (!x) throw ConfigError("expected an integer, got '" + f + "'");
    out.push_back(static_cast<int>(*x));
  }
  return out;
}

BandDeclaration parse_bands(const std::string& v) {
  BandDeclaration out;
  for (const auto& band : text::split_list(v, ';')) {
    const auto colon = band.find(':');
    if (colon == std::string::npos) throw ConfigError("band '" + band + "' must look like name: label | label");
    const auto name = std::string(text::trim(std::string_view(band).substr(0, colon)));
    auto members = text::split_list(std::string_view(band).substr(colon + 1), '|');
    if (name.empty() || members.empty()) throw ConfigError("band '" + band + "' needs a name and members");
    out.emplace_back(name, std::move(members));
  }
  return out;
}

void apply_design(EvidenceDesign& d, const std::string& field, const std::string& v) {
  const std::map<std::string, std::vector<int>*> lists = {
      {"sero_timepoints", &d.sero_timepoints},   {"estimate_waves", &d.estimate_waves},
      {"hospital_waves", &d.hospital_waves},     {"icu_waves", &d.icu_waves},
      {"death_waves", &d.death_waves},           {"outcome_waves", &d.outcome_waves},
      {"icu_logcount_waves", &d.icu_logcount_waves}, {"symptomatic_logcount_waves", &d.symptomatic_logcount_waves}};
  const std::map<std::string, double*> numbers = {{"sero_sample_size", &d.sero_sample_size},
                                                  {"estimate_sd_log", &d.estimate_sd_log},
                                                  {"icu_logcount_sd", &d.icu_logcount_sd},
                                                  {"symptomatic_logcount_sd", &d.symptomatic_logcount_sd}};
  if (const auto it = lists.find(field); it != lists.end()) *it->second = parse_ints(v);
  else if (const auto jt = numbers.find(field); jt != numbers.end()) *jt->second = parse_number(v);
  else throw ConfigError("unknown design field '" + field + "'");
}

}  // namespace

RunMode parse_run_mode(std::string_view text) {
  if (text == "A") return RunMode::A;
  if (text == "B") return RunMode::B;
  if (text == "C") return RunMode::C;
  if (text == "two-stage") return RunMode::TwoStage;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected A, B, C or two-stage)");
}

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::A: return "A";
    case RunMode::B: return "B";
    case RunMode::C: return "C";
    case RunMode::TwoStage: return "two-stage";
  }
  return "?";
}

std::vector<std::string> default_monitor() {
  return {"iar.w*.a*", "chr.w*.a*", "cir.w*.a*", "cfr.w*.a*", "iar.w*.all", "chr.w*.all", "cir.w*.all",
          "cfr.w*.all"};
}

AgeGrid RunConfig::grid() const {
  if (grid_population.empty()) throw ConfigError("grid.population is required");
  if (grid_population.size() != grid_labels.size())
    throw ConfigError("grid.population has " + std::to_string(grid_population.size()) + " entries for " +
                      std::to_string(grid_labels.size()) + " age bands");
  try {
    return AgeGrid(grid_labels, grid_population);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

AgeAggregation RunConfig::aggregation_for(const AgeGrid& g) const {
  auto agg = AgeAggregation::identity(g);
  for (const auto& [level, bands] : aggregation) agg.set_bands(level, g, bands);
  return agg;
}

RunConfig parse_config(std::string_view content, const std::string& source_name,
                       const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(content)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto body = text::trim(raw);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source_name + ":" + std::to_string(line) + ": expected 'key = value'");
    const std::string key(text::trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError(source_name + ":" + std::to_string(line) + ": empty key");
    if (entries.count(key))
      throw ConfigError(source_name + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
    entries[key] = {std::string(text::trim(body.substr(eq + 1))), line};
  }

  Reader r(std::move(entries), source_name);
  RunConfig cfg;
  cfg.source = source_name;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  r.with("run.variant", [&](const std::string& v) { cfg.mode = parse_run_mode(v); });
  r.with("run.seed", [&](const std::string& v) { cfg.seed = parse_u64(v); });
  r.with("run.protocol", [&](const std::string& v) {
    if (v == "desk") cfg.protocol = RunProtocol::desk();
    else if (v == "full") cfg.protocol = RunProtocol{};
    else throw ConfigError("expected desk or full");
  });
  r.with("run.chains", [&](const std::string& v) { cfg.protocol.n_chains = parse_size(v); });
  r.with("run.iterations", [&](const std::string& v) { cfg.protocol.n_iterations = parse_size(v); });
  r.with("run.burn_in", [&](const std::string& v) { cfg.protocol.burn_in = parse_size(v); });
  r.with("run.thin", [&](const std::string& v) { cfg.protocol.thin = parse_size(v); });
  r.with("run.adapt_window", [&](const std::string& v) { cfg.protocol.adapt_window = parse_size(v); });
  r.with("run.parallel", [&](const std::string& v) { cfg.protocol.parallel = parse_bool(v); });
  r.with("run.output", [&](const std::string& v) { cfg.output = path(v); });
  r.with("run.monitor", [&](const std::string& v) {
    cfg.monitor = text::split_list(v);
    if (cfg.monitor.empty()) throw ConfigError("at least one pattern is required");
  });

  r.with("grid.labels", [&](const std::string& v) { cfg.grid_labels = text::split_list(v); });
  r.with("grid.population", [&](const std::string& v) { cfg.grid_population = parse_numbers(v); });
  for (const auto& [level, v] : r.take_prefix("aggregate.")) {
    try {
      cfg.aggregation.emplace_back(parse_level(level), parse_bands(v));
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ": aggregate." + level + ": " + e.what());
    }
  }

  r.with("data.evidence", [&](const std::string& v) { cfg.evidence = path(v); });
  r.with("data.sentinel", [&](const std::string& v) { cfg.sentinel = path(v); });
  r.with("data.transfer", [&](const std::string& v) { cfg.transfer = path(v); });
  r.with("data.stage1_summary", [&](const std::string& v) { cfg.stage1_summary = path(v); });
  r.with("data.truth", [&](const std::string& v) { cfg.truth = path(v); });

  r.with("prior.sensitivity", [&](const std::string& v) {
    sensitivity_prior(v);
    cfg.sensitivity_prior = v;
  });
  for (const auto& [key, v] : r.take_prefix("prior.")) {
    try {
      cfg.priors.set(key, parse_prior(v));
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ": prior." + key + ": " + e.what());
    }
  }
  r.with("link.pairs", [&](const std::string& v) { cfg.linked_pairs = text::split_list(v); });
  r.with("compare.pairs", [&](const std::string& v) {
    for (const auto& p : text::split_list(v)) cfg.compare.push_back(parse_compare_pair(p));
  });

  const std::size_t na = cfg.grid_labels.size();
  cfg.propensity.assign(na, std::nullopt);
  r.with("submodel.propensity", [&](const std::string& v) {
    const auto values = parse_numbers(v);
    if (values.size() != na)
      throw ConfigError("expected " + std::to_string(na) + " values, one per age band");
    for (std::size_t a = 0; a < na; ++a) cfg.propensity[a] = FixedSpec{values[a]};
  });
  for (const auto& [key, v] : r.take_prefix("submodel.propensity.")) {
    const auto q = parse_quantity_name("x." + key);
    if (!q.age || q.wave || q.symbol != "x" || *q.age >= na)
      throw ConfigError(source_name + ": submodel.propensity." + key + ": expected aA with A in 1.." +
                        std::to_string(na));
    try {
      cfg.propensity[*q.age] = parse_prior(v);
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ": submodel.propensity." + key + ": " + e.what());
    }
  }
  r.with("submodel.interaction", [&](const std::string& v) { cfg.interaction = parse_bool(v); });
  r.with("submodel.restrict_positivity", [&](const std::string& v) { cfg.restrict_positivity = parse_bool(v); });
  r.with("submodel.max_swab_delay", [&](const std::string& v) {
    cfg.max_swab_delay = parse_number(v);
    if (!(cfg.max_swab_delay >= 0)) throw ConfigError("must be >= 0");
  });

  r.with("sim.waves", [&](const std::string& v) { cfg.sim.waves = parse_ints(v); });
  r.with("sim.seed", [&](const std::string& v) { cfg.sim.seed = parse_u64(v); });
  r.with("sim.sentinel", [&](const std::string& v) { cfg.sim.sentinel = parse_bool(v); });
  r.with("sim.detection_prior_sd", [&](const std::string& v) {
    cfg.sim.detection_prior_sd = parse_number(v);
    if (!(cfg.sim.detection_prior_sd > 0)) throw ConfigError("must be > 0");
  });
  for (const auto& [key, v] : r.take_prefix("truth.")) {
    try {
      cfg.sim.truth.emplace_back(key, parse_number(v));
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ": truth." + key + ": " + e.what());
    }
  }
  for (auto& kv : r.take_prefix("design.")) {
    EvidenceDesign probe;
    try {
      apply_design(probe, kv.first, kv.second);
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ": design." + kv.first + ": " + e.what());
    }
    cfg.sim.design.push_back(std::move(kv));
  }

  r.reject_unknown();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string(), path.parent_path());
}

Scenario scenario_from_config(const RunConfig& cfg) {
  auto sc = desk_scenario(cfg.sim.waves, cfg.sim.seed.value_or(cfg.seed));
  if (!cfg.grid_population.empty()) {
    const auto grid = cfg.grid();
    if (grid.labels() != sc.grid.labels())
      throw ConfigError("simulation uses the seven standard age bands; grid.labels must match them");
    sc.grid = grid;
  }
  for (const auto& [field, v] : cfg.sim.design) apply_design(sc.design, field, v);
  const auto& ws = sc.waves();
  for (const auto& [key, value] : cfg.sim.truth) {
    const auto q = parse_quantity_name(key);
    auto fail = [&](const std::string& what) { return ConfigError("truth." + key + ": " + what); };
    auto ages = [&]() -> std::vector<std::size_t> {
      if (q.age) {
        if (*q.age >= sc.grid.size()) throw fail("age index out of range");
        return {*q.age};
      }
      std::vector<std::size_t> all(sc.grid.size());
      for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
      return all;
    };
    if (q.symbol == "pi_base") {
      if (q.wave) throw fail("pi_base has no wave");
      for (auto a : ages()) sc.baseline_prevalence[a] = value;
      continue;
    }
    if (!q.wave || std::find(ws.begin(), ws.end(), *q.wave) == ws.end()) throw fail("needs a simulated wave");
    const int w = *q.wave;
    const std::map<std::string, std::function<double&(std::size_t)>> cell = {
        {"iar", [&](std::size_t a) -> double& { return sc.truth.at(w, a).iar; }},
        {"c_s_inf", [&](std::size_t a) -> double& { return sc.truth.at(w, a).s_given_inf; }},
        {"c_h_s", [&](std::size_t a) -> double& { return sc.truth.at(w, a).h_given_s; }},
        {"c_i_h", [&](std::size_t a) -> double& { return sc.truth.at(w, a).i_given_h; }},
        {"c_d_h", [&](std::size_t a) -> double& { return sc.truth.at(w, a).d_given_h; }},
        {"d_s", [&](std::size_t a) -> double& { return sc.detection.symptomatic(w, a); }}};
    if (const auto it = cell.find(q.symbol); it != cell.end()) {
      for (auto a : ages()) it->second(a) = value;
      continue;
    }
    const std::map<std::string, SeverityLevel> severe = {
        {"d_h", SeverityLevel::H}, {"d_i", SeverityLevel::I}, {"d_d", SeverityLevel::D}};
    if (const auto it = severe.find(q.symbol); it != severe.end() && !q.age) {
      sc.detection.severe(w, it->second) = value;
      continue;
    }
    throw fail("unknown generating parameter");
  }
  sc.validate();
  return sc;
}

}  // namespace sevsyn
