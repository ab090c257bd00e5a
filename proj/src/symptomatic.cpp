#include "sevsyn/symptomatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "sevsyn/diagnostics.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/special.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

double SentinelCell::swab_total() const {
  double s = 0;
  for (const auto& g : swabs) s += g.total;
  return s;
}

double SentinelCell::swab_positive() const {
  double s = 0;
  for (const auto& g : swabs) s += g.positive;
  return s;
}

SentinelSeries::SentinelSeries(std::vector<int> weeks, std::vector<std::string> ages)
    : weeks_(std::move(weeks)), ages_(std::move(ages)), cells_(weeks_.size() * ages_.size()) {}

bool SentinelSeries::has_delays() const {
  bool any = false;
  for (const auto& c : cells_)
    for (const auto& g : c.swabs) {
      if (!g.delay_days) return false;
      any = true;
    }
  return any;
}

void SentinelSeries::validate() const {
  for (std::size_t t = 0; t < n_weeks(); ++t)
    for (std::size_t a = 0; a < n_ages(); ++a) {
      const auto& c = cell(t, a);
      const std::string where = "sentinel week " + std::to_string(weeks_[t]) + " band " + ages_[a] + ": ";
      if (!(c.denominator > 0)) throw DataError(where + "denominator must be > 0");
      if (!(c.ili_count >= 0)) throw DataError(where + "ili_count must be >= 0");
      for (const auto& g : c.swabs)
        if (!(g.positive >= 0 && g.positive <= g.total)) throw DataError(where + "swab_positive exceeds swab_total");
    }
}

SentinelSeries parse_sentinel(const CsvTable& table) {
  const auto& src = table.source();
  const auto c_week = table.require_column("week");
  const auto c_age = table.require_column("age_band");
  const auto c_ili = table.require_column("ili_count");
  const auto c_den = table.require_column("denominator");
  const auto c_tot = table.require_column("swab_total");
  const auto c_pos = table.require_column("swab_positive");
  const auto c_delay = table.column("swab_delay_days");

  struct Row {
    std::size_t line;
    int week;
    std::string age;
    double ili, den;
    SwabGroup swab;
  };
  std::vector<Row> rows;
  std::vector<int> weeks;
  std::vector<std::string> ages;
  for (const auto& r : table.rows()) {
    auto count = [&](std::size_t c, const char* name) {
      const auto v = text::to_double(r.fields[c]);
      if (!v || *v < 0 || std::floor(*v) != *v)
        throw DataError(src, r.line, std::string("column '") + name + "' must be a nonnegative integer");
      return *v;
    };
    const auto week = text::to_int(r.fields[c_week]);
    if (!week) throw DataError(src, r.line, "column 'week' must be an integer");
    Row row{r.line, static_cast<int>(*week), r.fields[c_age], count(c_ili, "ili_count"), 0, {}};
    const auto den = text::to_double(r.fields[c_den]);
    if (!den || !(*den > 0)) throw DataError(src, r.line, "column 'denominator' must be > 0");
    row.den = *den;
    row.swab.total = count(c_tot, "swab_total");
    row.swab.positive = count(c_pos, "swab_positive");
    if (row.swab.positive > row.swab.total) throw DataError(src, r.line, "swab_positive exceeds swab_total");
    if (c_delay && !r.fields[*c_delay].empty()) {
      const auto d = text::to_double(r.fields[*c_delay]);
      if (!d || *d < 0) throw DataError(src, r.line, "column 'swab_delay_days' must be >= 0");
      row.swab.delay_days = *d;
    }
    if (row.age.empty()) throw DataError(src, r.line, "column 'age_band' is empty");
    if (std::find(weeks.begin(), weeks.end(), row.week) == weeks.end()) weeks.push_back(row.week);
    if (std::find(ages.begin(), ages.end(), row.age) == ages.end()) ages.push_back(row.age);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(src, 0, "no sentinel rows");
  std::sort(weeks.begin(), weeks.end());

  SentinelSeries series(weeks, ages);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& row : rows) {
    const auto t = static_cast<std::size_t>(std::find(weeks.begin(), weeks.end(), row.week) - weeks.begin());
    const auto a = static_cast<std::size_t>(std::find(ages.begin(), ages.end(), row.age) - ages.begin());
    auto& cell = series.cell(t, a);
    if (seen.insert({t, a}).second) {
      cell.ili_count = row.ili;
      cell.denominator = row.den;
    } else if (cell.ili_count != row.ili || cell.denominator != row.den) {
      throw DataError(src, row.line, "rows for the same week and age_band disagree on ili_count or denominator");
    }
    cell.swabs.push_back(row.swab);
  }
  if (seen.size() != weeks.size() * ages.size())
    throw DataError(src, 0, "sentinel series is missing some (week, age_band) combinations");
  return series;
}

SentinelSeries load_sentinel(const std::filesystem::path& path) { return parse_sentinel(read_csv(path)); }

void write_sentinel(const std::filesystem::path& path, const SentinelSeries& series) {
  CsvWriter out(path);
  const bool delays = series.has_delays();
  std::vector<std::string> header{"week", "age_band", "ili_count", "denominator", "swab_total", "swab_positive"};
  if (delays) header.push_back("swab_delay_days");
  out.row(header);
  for (std::size_t t = 0; t < series.n_weeks(); ++t)
    for (std::size_t a = 0; a < series.n_ages(); ++a) {
      const auto& c = series.cell(t, a);
      std::vector<SwabGroup> groups = c.swabs;
      if (groups.empty()) groups.push_back({});
      for (const auto& g : groups) {
        std::vector<std::string> row{std::to_string(series.weeks()[t]), series.ages()[a],
                                     text::format_double(c.ili_count), text::format_double(c.denominator),
                                     text::format_double(g.total), text::format_double(g.positive)};
        if (delays) row.push_back(g.delay_days ? text::format_double(*g.delay_days) : "");
        out.row(row);
      }
    }
}

SentinelSeries restrict_positivity(const SentinelSeries& series, double max_days) {
  if (max_days == std::numeric_limits<double>::infinity()) return series;
  if (!series.has_delays())
    throw ConfigError("positivity restriction requested but the sentinel series has no swab_delay_days");
  SentinelSeries out = series;
  for (std::size_t t = 0; t < out.n_weeks(); ++t)
    for (std::size_t a = 0; a < out.n_ages(); ++a) {
      auto& swabs = out.cell(t, a).swabs;
      std::erase_if(swabs, [&](const SwabGroup& g) { return *g.delay_days > max_days; });
    }
  return out;
}

double RegressionParams::rate(std::size_t t, std::size_t a) const {
  double eta = rate_intercept + rate_week.at(t) + rate_age.at(a);
  if (!rate_interaction.empty()) eta += rate_interaction.at(t * rate_age.size() + a);
  return std::exp(eta);
}

double RegressionParams::positivity(std::size_t t, std::size_t a) const {
  double eta = pos_intercept + pos_week.at(t) + pos_age.at(a);
  if (!pos_interaction.empty()) eta += pos_interaction.at(t * pos_age.size() + a);
  return inv_logit(eta);
}

double loglik_consultations(const SentinelSeries& series, const RegressionParams& params) {
  double total = 0.0;
  for (std::size_t t = 0; t < series.n_weeks(); ++t)
    for (std::size_t a = 0; a < series.n_ages(); ++a) {
      const auto& c = series.cell(t, a);
      total += neg_binomial_log_pmf(c.ili_count, c.denominator * params.rate(t, a), params.dispersion);
    }
  return total;
}

double loglik_positivity(const SentinelSeries& series, const RegressionParams& params) {
  double total = 0.0;
  for (std::size_t t = 0; t < series.n_weeks(); ++t)
    for (std::size_t a = 0; a < series.n_ages(); ++a) {
      const auto& c = series.cell(t, a);
      const double p = params.positivity(t, a);
      for (const auto& g : c.swabs) total += binomial_log_pmf(g.positive, g.total, p);
    }
  return total;
}

std::vector<double> log_symptomatic(const SentinelSeries& series, const RegressionParams& params,
                                    std::span<const double> population) {
  std::vector<double> out(series.n_ages());
  for (std::size_t a = 0; a < series.n_ages(); ++a) {
    double s = 0.0;
    for (std::size_t t = 0; t < series.n_weeks(); ++t) s += params.rate(t, a) * params.positivity(t, a);
    out[a] = std::log(s) + std::log(population[a]) - std::log(params.propensity.at(a));
  }
  return out;
}

SymptomaticModel::SymptomaticModel(SentinelSeries series, SymptomaticPriors priors)
    : series_(std::move(series)), interaction_(priors.interaction) {
  series_.validate();
  const auto& weeks = series_.weeks();
  const auto& ages = series_.ages();
  if (priors.propensity.size() != ages.size())
    throw ConfigError("symptomatic submodel: need one propensity prior per sentinel age band (" +
                      std::to_string(ages.size()) + "), got " + std::to_string(priors.propensity.size()));

  auto add_regression = [&](const std::string& prefix, const PriorSpec& intercept, const PriorSpec& effect) {
    const std::size_t first = priors_.add(prefix + ".intercept", intercept);
    for (std::size_t t = 1; t < weeks.size(); ++t) priors_.add(prefix + ".week." + std::to_string(weeks[t]), effect);
    for (std::size_t a = 1; a < ages.size(); ++a) priors_.add(prefix + ".age." + ages[a], effect);
    if (interaction_)
      for (std::size_t t = 1; t < weeks.size(); ++t)
        for (std::size_t a = 1; a < ages.size(); ++a)
          priors_.add(prefix + ".int." + std::to_string(weeks[t]) + "." + ages[a], effect);
    return first;
  };
  auto add_block = [&](std::string name, BlockKind kind, std::size_t first, std::size_t last) {
    const auto& p = priors_.parameters();
    const std::size_t offset = p[first].offset;
    const std::size_t end = last > first ? p[last - 1].offset + p[last - 1].size : offset;
    blocks_.push_back({std::move(name), offset, end - offset});
    block_kinds_.push_back(kind);
    block_params_.push_back({first, last});
  };

  rate_first_ = add_regression("rate", priors.rate_intercept, priors.rate_effect);
  add_block("rate", BlockKind::Rate, rate_first_, priors_.size());
  dispersion_ = priors_.add("dispersion", priors.dispersion);
  add_block("dispersion", BlockKind::Dispersion, dispersion_, priors_.size());
  pos_first_ = add_regression("pos", priors.pos_intercept, priors.pos_effect);
  add_block("pos", BlockKind::Positivity, pos_first_, priors_.size());
  propensity_first_ = priors_.size();
  for (std::size_t a = 0; a < ages.size(); ++a) {
    const auto p = priors_.add("propensity." + ages[a], priors.propensity[a]);
    if (const auto* f = std::get_if<FixedSpec>(&priors.propensity[a]); f && !(f->value > 0 && f->value <= 1))
      throw ConfigError("propensity for band " + ages[a] + " must lie in (0,1]");
    if (priors_.parameter(p).size > 0) add_block("propensity." + ages[a], BlockKind::Propensity, p, p + 1);
  }
}

RegressionParams SymptomaticModel::decode(std::span<const double> u) const {
  const std::size_t nw = series_.n_weeks(), na = series_.n_ages();
  RegressionParams r;
  auto read = [&](std::size_t first, double& intercept, std::vector<double>& week, std::vector<double>& age,
                  std::vector<double>& inter) {
    std::size_t p = first;
    intercept = priors_.scalar(p++, u);
    week.assign(nw, 0.0);
    age.assign(na, 0.0);
    for (std::size_t t = 1; t < nw; ++t) week[t] = priors_.scalar(p++, u);
    for (std::size_t a = 1; a < na; ++a) age[a] = priors_.scalar(p++, u);
    if (interaction_) {
      inter.assign(nw * na, 0.0);
      for (std::size_t t = 1; t < nw; ++t)
        for (std::size_t a = 1; a < na; ++a) inter[t * na + a] = priors_.scalar(p++, u);
    }
  };
  read(rate_first_, r.rate_intercept, r.rate_week, r.rate_age, r.rate_interaction);
  read(pos_first_, r.pos_intercept, r.pos_week, r.pos_age, r.pos_interaction);
  r.dispersion = priors_.scalar(dispersion_, u);
  for (std::size_t a = 0; a < na; ++a) r.propensity.push_back(priors_.scalar(propensity_first_ + a, u));
  return r;
}

double SymptomaticModel::prior_range(std::size_t first, std::size_t last, std::span<const double> u) const {
  double s = 0.0;
  for (std::size_t p = first; p < last; ++p) s += priors_.log_density(p, u);
  return s;
}

double SymptomaticModel::log_density(std::span<const double> u) const {
  const auto params = decode(u);
  return log_prior_density(u, priors_) + loglik_consultations(series_, params) + loglik_positivity(series_, params);
}

double SymptomaticModel::block_log_density(std::size_t block, std::span<const double> u) const {
  const auto [first, last] = block_params_[block];
  double lp = prior_range(first, last, u);
  switch (block_kinds_[block]) {
    case BlockKind::Rate:
    case BlockKind::Dispersion: return lp + loglik_consultations(series_, decode(u));
    case BlockKind::Positivity: return lp + loglik_positivity(series_, decode(u));
    case BlockKind::Propensity: return lp;
  }
  return lp;
}

void SymptomaticModel::sample_initial(Rng& rng, std::span<double> u) const { priors_.sample(rng, u); }

SymptomaticFit estimate_symptomatic(const SentinelSeries& series, const SymptomaticPriors& priors,
                                    const AgeGrid& grid, const RunProtocol& protocol,
                                    std::span<const std::uint64_t> seeds) {
  double ili = 0, positives = 0;
  for (std::size_t t = 0; t < series.n_weeks(); ++t)
    for (std::size_t a = 0; a < series.n_ages(); ++a) {
      ili += series.cell(t, a).ili_count;
      positives += series.cell(t, a).swab_positive();
    }
  if (ili == 0) throw DataError("sentinel series is degenerate: no ILI consultations");
  if (positives == 0) throw DataError("sentinel series is degenerate: no positive swabs");

  std::vector<double> population;
  for (const auto& label : series.ages()) {
    const auto a = grid.index_of(label);
    if (!a) throw ConfigError("sentinel age band '" + label + "' is not in the age grid");
    population.push_back(grid.population(*a));
  }

  const SymptomaticModel model(series, priors);
  SymptomaticFit fit;
  fit.run = run(model, protocol, seeds);
  const std::size_t na = series.n_ages();
  for (const auto& chain : fit.run.chains) {
    std::vector<double> values;
    values.reserve(chain.size() * na);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const auto row = log_symptomatic(series, model.decode(chain.draw(i)), population);
      values.insert(values.end(), row.begin(), row.end());
    }
    fit.log_n.push_back(std::move(values));
  }

  for (std::size_t a = 0; a < na; ++a) {
    std::vector<std::vector<double>> per_chain;
    for (std::size_t c = 0; c < fit.log_n.size(); ++c) {
      std::vector<double> x;
      for (std::size_t i = a; i < fit.log_n[c].size(); i += na) x.push_back(fit.log_n[c][i]);
      per_chain.push_back(std::move(x));
    }
    double n = 0, sum = 0;
    for (const auto& x : per_chain)
      for (double v : x) sum += v, ++n;
    const double mean = sum / n;
    double ss = 0;
    for (const auto& x : per_chain)
      for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;

    SymptomaticSummaryRow row;
    row.age_band = series.ages()[a];
    row.mean_log = mean;
    row.sd_log = sd;
    if (!(sd >= kSdLogFloor)) {
      row.sd_log = kSdLogFloor;
      row.degenerate = true;
    } else if (per_chain.front().size() >= 10) {
      row.mcse = sd / std::sqrt(effective_sample_size(per_chain));
    }
    fit.summary.push_back(row);
  }
  return fit;
}

void write_symptomatic_summary(const std::filesystem::path& path, std::span<const SymptomaticSummaryRow> rows) {
  CsvWriter out(path);
  out.row({"age_band", "mean_log", "sd_log"});
  for (const auto& r : rows) out.row({r.age_band, text::format_double(r.mean_log), text::format_double(r.sd_log)});
}

std::vector<SymptomaticSummaryRow> load_symptomatic_summary(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_age = table.require_column("age_band");
  const auto c_mean = table.require_column("mean_log");
  const auto c_sd = table.require_column("sd_log");
  std::vector<SymptomaticSummaryRow> out;
  for (const auto& r : table.rows()) {
    SymptomaticSummaryRow row;
    row.age_band = r.fields[c_age];
    const auto m = text::to_double(r.fields[c_mean]);
    const auto s = text::to_double(r.fields[c_sd]);
    if (!m || !std::isfinite(*m)) throw DataError(table.source(), r.line, "mean_log must be a finite number");
    if (!s || !(*s > 0)) throw DataError(table.source(), r.line, "sd_log must be > 0");
    row.mean_log = *m;
    row.sd_log = *s;
    out.push_back(row);
  }
  return out;
}

}  // namespace sevsyn
