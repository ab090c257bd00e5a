#include "sevsyn/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sevsyn/csv.hpp"
#include "sevsyn/diagnostics.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

QuantityName parse_quantity_name(std::string_view name) {
  QuantityName q;
  auto parts = text::split(name, '.');
  q.symbol = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p == "all") {
      q.all_ages = true;
      continue;
    }
    if (p.size() > 1 && (p[0] == 'w' || p[0] == 'a')) {
      if (const auto v = text::to_int(std::string_view(p).substr(1)); v && *v >= 0) {
        if (p[0] == 'w') q.wave = static_cast<int>(*v);
        else if (*v >= 1) q.age = static_cast<std::size_t>(*v - 1);
        continue;
      }
    }
    q.symbol += "." + p;
  }
  return q;
}

std::string quantity_name(std::string_view symbol, std::optional<int> wave, std::optional<std::size_t> age) {
  std::string s(symbol);
  if (wave) s += ".w" + std::to_string(*wave);
  if (age) s += ".a" + std::to_string(*age + 1);
  return s;
}

std::string quantity_name_all(std::string_view symbol, int wave) {
  return std::string(symbol) + ".w" + std::to_string(wave) + ".all";
}

std::size_t DrawTable::draws_per_chain() const {
  if (chains.empty() || names.empty()) return 0;
  return chains.front().size() / names.size();
}

std::size_t DrawTable::total_draws() const { return chains.size() * draws_per_chain(); }

std::optional<std::size_t> DrawTable::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::vector<std::vector<double>> DrawTable::series(std::size_t q) const {
  std::vector<std::vector<double>> out;
  const std::size_t n = draws_per_chain();
  for (std::size_t c = 0; c < chains.size(); ++c) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = at(c, i, q);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<double> DrawTable::pooled(std::size_t q) const {
  std::vector<double> out;
  for (auto& s : series(q)) out.insert(out.end(), s.begin(), s.end());
  return out;
}

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

const SummaryRow* PosteriorSummary::find(std::string_view quantity) const {
  for (const auto& r : rows)
    if (r.quantity == quantity) return &r;
  return nullptr;
}

const SummaryRow& PosteriorSummary::require(std::string_view quantity) const {
  if (const auto* r = find(quantity)) return *r;
  throw ConfigError("posterior summary has no quantity '" + std::string(quantity) + "'");
}

PosteriorSummary summarize(const DrawTable& draws) {
  if (draws.total_draws() == 0) throw std::invalid_argument("summarize: no draws");
  PosteriorSummary out;
  for (std::size_t q = 0; q < draws.n_quantities(); ++q) {
    const auto chains = draws.series(q);
    std::vector<double> all;
    for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
    SummaryRow row;
    row.quantity = draws.names[q];
    double sum = 0.0;
    for (double v : all) sum += v;
    row.mean = sum / all.size();
    double ss = 0.0;
    for (double v : all) ss += (v - row.mean) * (v - row.mean);
    row.sd = all.size() > 1 ? std::sqrt(ss / (all.size() - 1)) : 0.0;
    std::sort(all.begin(), all.end());
    row.median = quantile_type7(all, 0.5);
    row.lo = quantile_type7(all, 0.025);
    row.hi = quantile_type7(all, 0.975);
    if (chains.front().size() >= 10) {
      const auto r = rhat(chains);
      row.rhat = r.value;
      row.rhat_degenerate = r.degenerate;
      row.ess = effective_sample_size(chains);
    } else {
      row.rhat = row.ess = std::numeric_limits<double>::quiet_NaN();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_summary(const std::filesystem::path& path, const PosteriorSummary& summary) {
  CsvWriter out(path);
  out.row({"quantity", "mean", "sd", "median", "q2.5", "q97.5", "rhat", "ess"});
  using text::format_double;
  for (const auto& r : summary.rows)
    out.row({r.quantity, format_double(r.mean), format_double(r.sd), format_double(r.median), format_double(r.lo),
             format_double(r.hi), format_double(r.rhat), format_double(r.ess)});
}

PosteriorSummary load_summary(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const std::vector<std::string> cols{"quantity", "mean", "sd", "median", "q2.5", "q97.5", "rhat", "ess"};
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(table.require_column(c));
  PosteriorSummary out;
  for (const auto& r : table.rows()) {
    auto num = [&](std::size_t i) {
      const auto& f = r.fields[idx[i]];
      if (f == "nan" || f == "-nan") return std::numeric_limits<double>::quiet_NaN();
      const auto v = text::to_double(f);
      if (!v) throw DataError(table.source(), r.line, "column '" + cols[i] + "': cannot parse '" + f + "'");
      return *v;
    };
    SummaryRow row;
    row.quantity = r.fields[idx[0]];
    row.mean = num(1);
    row.sd = num(2);
    row.median = num(3);
    row.lo = num(4);
    row.hi = num(5);
    row.rhat = num(6);
    row.ess = num(7);
    out.rows.push_back(std::move(row));
  }
  return out;
}

ComparePair parse_compare_pair(std::string_view text) {
  const auto parts = text::split_list(text, ':');
  const auto fail = [&] {
    return ConfigError("comparison '" + std::string(text) + "' must look like symbol:wave_from:wave_to");
  };
  if (parts.size() != 3 || parts[0].empty()) throw fail();
  const auto from = text::to_int(parts[1]);
  const auto to = text::to_int(parts[2]);
  if (!from || !to || *from == *to) throw fail();
  return {parts[0], static_cast<int>(*from), static_cast<int>(*to)};
}

std::vector<CompareRow> compare_waves(const DrawTable& draws, std::span<const ComparePair> pairs,
                                      std::span<const std::string> age_labels) {
  std::vector<CompareRow> out;
  auto column = [&](const std::string& name) {
    const auto q = draws.index_of(name);
    if (!q) throw ConfigError("comparison needs quantity '" + name + "', which is not monitored");
    return *q;
  };
  const std::size_t n = draws.draws_per_chain();
  const double total = static_cast<double>(draws.total_draws());
  for (const auto& pair : pairs) {
    auto add = [&](const std::string& from_name, const std::string& to_name, std::string age) {
      const auto qf = column(from_name);
      const auto qt = column(to_name);
      std::size_t greater = 0;
      for (std::size_t c = 0; c < draws.chains.size(); ++c)
        for (std::size_t i = 0; i < n; ++i)
          if (draws.at(c, i, qt) > draws.at(c, i, qf)) ++greater;
      out.push_back({pair.symbol, pair.wave_from, pair.wave_to, std::move(age), greater / total});
    };
    for (std::size_t a = 0; a < age_labels.size(); ++a)
      add(quantity_name(pair.symbol, pair.wave_from, a), quantity_name(pair.symbol, pair.wave_to, a), age_labels[a]);
    add(quantity_name_all(pair.symbol, pair.wave_from), quantity_name_all(pair.symbol, pair.wave_to), "All ages");
  }
  return out;
}

void write_compare(const std::filesystem::path& path, std::span<const CompareRow> rows) {
  CsvWriter out(path);
  out.row({"quantity", "wave_from", "wave_to", "age", "probability"});
  for (const auto& r : rows)
    out.row({r.symbol, std::to_string(r.wave_from), std::to_string(r.wave_to), r.age,
             text::format_double(r.probability)});
}

void write_plotdata(const std::filesystem::path& dir, const PosteriorSummary& summary,
                    std::span<const std::string> age_labels) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<const SummaryRow*>> by_symbol;
  for (const auto& r : summary.rows) {
    const auto q = parse_quantity_name(r.quantity);
    if (q.wave && (q.age || q.all_ages)) by_symbol[q.symbol].push_back(&r);
  }
  for (const auto& [symbol, rows] : by_symbol) {
    CsvWriter out(dir / (symbol + ".csv"));
    out.row({"quantity", "age", "wave", "median", "lo", "hi"});
    for (const auto* r : rows) {
      const auto q = parse_quantity_name(r->quantity);
      std::string age = "All ages";
      if (q.age) age = *q.age < age_labels.size() ? age_labels[*q.age] : std::to_string(*q.age + 1);
      out.row({symbol, age, std::to_string(*q.wave), text::format_double(r->median), text::format_double(r->lo),
               text::format_double(r->hi)});
    }
  }
}

}  // namespace sevsyn
