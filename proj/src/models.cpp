#include "sevsyn/models.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "sevsyn/csv.hpp"
#include "sevsyn/errors.hpp"
#include "sevsyn/special.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

enum Slot { kIar = 0, kCs = 1, kCh = 2, kCi = 3, kCd = 4, kDs = 5 };

std::string age_suffix(std::size_t a) { return ".a" + std::to_string(a + 1); }
std::string wave_suffix(int w) { return ".w" + std::to_string(w); }

Slot conditional_slot(SeverityLevel level) {
  switch (level) {
    case SeverityLevel::Inf: return kIar;
    case SeverityLevel::S: return kCs;
    case SeverityLevel::H: return kCh;
    case SeverityLevel::I: return kCi;
    case SeverityLevel::D: return kCd;
  }
  return kIar;
}

// Reads pyramid entries straight from the unconstrained vector, touching only
// what an evidence item needs.
struct LazyView {
  const SeverityModel& m;
  std::span<const double> u;
  std::vector<std::size_t>* touched;

  double get(std::size_t wi, std::size_t a, std::size_t slot) const {
    return m.value(m.cell_ref(wi, a, slot), u, touched);
  }
  double count(int w, std::size_t a, SeverityLevel l) const {
    const auto wi = m.wave_index(w);
    double n = get(wi, a, kIar) * m.grid().population(a);
    if (l == SeverityLevel::Inf) return n;
    n = get(wi, a, kCs) * n;
    if (l == SeverityLevel::S) return n;
    n = get(wi, a, kCh) * n;
    if (l == SeverityLevel::H) return n;
    return get(wi, a, conditional_slot(l)) * n;
  }
  double detection(int w, std::size_t a, SeverityLevel l) const {
    const auto wi = m.wave_index(w);
    if (l == SeverityLevel::S) return get(wi, a, kDs);
    return m.value(m.severe_detection_ref(wi, l), u, touched);
  }
  double prevalence(int w, std::size_t a) const {
    double p = m.value(m.reference_prevalence_ref(a), u, touched);
    for (std::size_t wi = 0; wi < m.waves().size(); ++wi) {
      const int v = m.waves()[wi];
      if (v > m.reference_wave() && v <= w) p += get(wi, a, kIar);
    }
    return p;
  }
  double conditional(int w, std::size_t a, SeverityLevel l) const {
    return get(m.wave_index(w), a, conditional_slot(l));
  }
};

const std::vector<std::string> kCellSymbols = {"iar",  "c_s_inf", "c_h_s", "c_i_h", "c_d_h", "sar",   "chr",
                                               "cir",  "cfr",     "schr",  "scir",  "scfr",  "n_inf", "n_s",
                                               "n_h",  "n_i",     "n_d",   "d_s",   "prev"};
const std::vector<std::string> kAllAgeSymbols = {"iar",  "c_s_inf", "c_h_s", "c_i_h", "c_d_h", "sar",
                                                 "chr",  "cir",     "cfr",   "schr",  "scir",  "scfr",
                                                 "n_inf", "n_s",    "n_h",   "n_i",   "n_d",   "prev"};

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::A: return "A";
    case Variant::B: return "B";
    case Variant::C: return "C";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "A") return Variant::A;
  if (text == "B") return Variant::B;
  if (text == "C") return Variant::C;
  throw ConfigError("unknown model variant '" + std::string(text) + "' (expected A, B or C)");
}

std::vector<int> waves_of(Variant v) {
  switch (v) {
    case Variant::A: return {1, 2};
    case Variant::B: return {3};
    case Variant::C: return {1, 2, 3};
  }
  return {};
}

void PriorOverrides::set(std::string key, PriorSpec prior) {
  validate(prior);
  entries_[std::move(key)] = std::move(prior);
}

std::optional<PriorSpec> PriorOverrides::lookup(std::string_view name) const {
  std::string key(name);
  while (true) {
    if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) return std::nullopt;
    key.resize(dot);
  }
}

std::vector<std::string> PriorOverrides::unused(std::span<const std::string> names) const {
  std::vector<std::string> out;
  for (const auto& [key, prior] : entries_) {
    const bool used = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
      return n == key || text::starts_with(n, key + ".");
    });
    if (!used) out.push_back(key);
  }
  return out;
}

std::size_t SeverityModel::add_basic(const std::string& name, std::optional<PriorSpec> fallback,
                                     std::vector<std::string> components) {
  auto prior = spec_.priors.lookup(name);
  if (!prior) prior = std::move(fallback);
  if (!prior) throw ConfigError("no prior for basic parameter '" + name + "'");
  const std::size_t want = components.empty() ? 1 : components.size();
  if (natural_dimension(*prior) != want)
    throw ConfigError("prior " + describe(*prior) + " for '" + name + "' has " +
                      std::to_string(natural_dimension(*prior)) + " component(s); the parameter needs " +
                      std::to_string(want));
  if (want > 1 && !std::holds_alternative<DirichletSpec>(*prior))
    throw ConfigError("parameter '" + name + "' needs a dirichlet prior");
  return priors_.add(name, std::move(*prior), std::move(components));
}

SeverityModel::SeverityModel(ModelSpec spec) : spec_(std::move(spec)), waves_(waves_of(spec_.variant)) {
  agg_ = spec_.aggregation ? *spec_.aggregation : AgeAggregation::identity(spec_.grid);
  const std::size_t na = spec_.grid.size();
  const std::size_t nw = waves_.size();
  const Variant v = spec_.variant;
  cell_refs_.assign(nw, std::vector<std::array<Ref, 6>>(na));
  severe_refs_.resize(nw);
  reference_refs_.resize(na);

  const PriorSpec flat = UniformSpec{0, 1};
  const PriorSpec beta11 = BetaSpec{1, 1, {}};
  auto scalar = [](std::size_t p) { return Ref{Ref::Scalar, p, 0, 0, 0}; };

  // Attack-rate simplex and reference prevalence per age.
  for (std::size_t a = 0; a < na; ++a) {
    const auto A = age_suffix(a);
    if (v == Variant::B) {
      const auto p = add_basic("prev" + A, std::nullopt, {"prev.w2" + A, "iar.w3" + A, "iar.rem" + A});
      reference_refs_[a] = {Ref::SimplexComponent, p, 0, 0, 0};
      cell_refs_[0][a][kIar] = {Ref::SimplexComponent, p, 1, 0, 0};
    } else {
      std::vector<std::string> comps;
      for (int w : waves_) comps.push_back("iar" + wave_suffix(w) + A);
      comps.push_back("iar.rem" + A);
      const auto p = add_basic("iar" + A, DirichletSpec{std::vector<double>(nw + 1, 1.0), {}}, comps);
      for (std::size_t wi = 0; wi < nw; ++wi) cell_refs_[wi][a][kIar] = {Ref::SimplexComponent, p, wi, 0, 0};
      reference_refs_[a] = scalar(add_basic("pi_base" + A, beta11));
    }
  }

  // c_{S|Inf}: one global value in C, per wave and age otherwise.
  if (v == Variant::C) {
    const auto p = add_basic("c_s_inf", flat);
    for (auto& wave : cell_refs_)
      for (auto& cell : wave) cell[kCs] = scalar(p);
  } else {
    for (std::size_t wi = 0; wi < nw; ++wi)
      for (std::size_t a = 0; a < na; ++a)
        cell_refs_[wi][a][kCs] = scalar(add_basic("c_s_inf" + wave_suffix(waves_[wi]) + age_suffix(a), flat));
  }

  // Severe-level conditionals; wave 3 of C may be linked to wave 2.
  const std::array<std::pair<Slot, std::string>, 3> pairs = {
      std::pair{kCh, std::string("h_s")}, std::pair{kCi, std::string("i_h")}, std::pair{kCd, std::string("d_h")}};
  for (const auto& lp : spec_.linked_pairs)
    if (std::find(kLinkablePairs.begin(), kLinkablePairs.end(), lp) == kLinkablePairs.end())
      throw ConfigError("unknown linked pair '" + lp + "' (expected h_s, i_h or d_h)");
  for (std::size_t wi = 0; wi < nw; ++wi) {
    const int w = waves_[wi];
    for (const auto& [slot, pair] : pairs) {
      const bool linked = v == Variant::C && w == 3 &&
                          std::find(spec_.linked_pairs.begin(), spec_.linked_pairs.end(), pair) !=
                              spec_.linked_pairs.end();
      if (linked) {
        const auto tau = add_basic("tau." + pair, flat);
        const auto w2 = wave_index(2);
        for (std::size_t a = 0; a < na; ++a) {
          const auto z = add_basic("z_" + pair + age_suffix(a), NormalSpec{0, 1});
          cell_refs_[wi][a][slot] = {Ref::Linked, cell_refs_[w2][a][slot].param, 0, tau, z};
        }
      } else {
        for (std::size_t a = 0; a < na; ++a)
          cell_refs_[wi][a][slot] = scalar(add_basic("c_" + pair + wave_suffix(w) + age_suffix(a), flat));
      }
    }
  }

  // Detection: age-specific for S, age-constant for H, I, D.
  for (std::size_t wi = 0; wi < nw; ++wi) {
    const int w = waves_[wi];
    for (std::size_t a = 0; a < na; ++a)
      cell_refs_[wi][a][kDs] = scalar(add_basic("d_s" + wave_suffix(w) + age_suffix(a), beta11));
    severe_refs_[wi][0] = scalar(add_basic("d_h" + wave_suffix(w), beta11));
    severe_refs_[wi][1] = scalar(add_basic("d_i" + wave_suffix(w), beta11));
    severe_refs_[wi][2] = scalar(add_basic("d_d" + wave_suffix(w), beta11));
  }

  std::vector<std::string> names;
  for (const auto& p : priors_.parameters()) names.push_back(p.name);
  if (const auto unused = spec_.priors.unused(names); spec_.strict_priors && !unused.empty())
    throw ConfigError("prior key '" + unused.front() + "' matches no basic parameter of variant " +
                      std::string(to_string(v)));

  for (std::size_t p = 0; p < priors_.size(); ++p) {
    const auto& param = priors_.parameter(p);
    if (param.size == 0) continue;
    blocks_.push_back({param.name, param.offset, param.size});
    block_param_.push_back(p);
  }

  bind_evidence();
  check_completeness();
  build_quantity_names();
}

std::size_t SeverityModel::wave_index(int wave) const {
  for (std::size_t i = 0; i < waves_.size(); ++i)
    if (waves_[i] == wave) return i;
  throw std::out_of_range("wave " + std::to_string(wave) + " is not modelled");
}

const SeverityModel::Ref& SeverityModel::cell_ref(std::size_t wave_index, std::size_t age, std::size_t slot) const {
  return cell_refs_[wave_index][age][slot];
}

const SeverityModel::Ref& SeverityModel::severe_detection_ref(std::size_t wave_index, SeverityLevel level) const {
  const auto i = static_cast<std::size_t>(level) - 2;
  if (i > 2) throw std::invalid_argument("no age-constant detection for this level");
  return severe_refs_[wave_index][i];
}

const SeverityModel::Ref& SeverityModel::reference_prevalence_ref(std::size_t age) const {
  return reference_refs_[age];
}

double SeverityModel::value(const Ref& ref, std::span<const double> u, std::vector<std::size_t>* touched) const {
  switch (ref.kind) {
    case Ref::Scalar:
      if (touched) touched->push_back(ref.param);
      return priors_.scalar(ref.param, u);
    case Ref::SimplexComponent: {
      if (touched) touched->push_back(ref.param);
      const auto& param = priors_.parameter(ref.param);
      std::array<double, 16> buf{};
      const auto k = param.components.size();
      if (k > buf.size()) throw std::logic_error("simplex too large");
      priors_.simplex(ref.param, u, std::span<double>(buf.data(), k));
      return buf[ref.component];
    }
    case Ref::Linked: {
      if (touched) {
        touched->push_back(ref.param);
        touched->push_back(ref.tau);
        touched->push_back(ref.z);
      }
      const double tau = priors_.scalar(ref.tau, u);
      const double z = priors_.scalar(ref.z, u);
      // Exact equality with wave 2 when the innovation has no effect.
      if (tau * z == 0.0) return priors_.scalar(ref.param, u);
      return inv_logit(link_third_wave(priors_.logit_value(ref.param, u), tau, z));
    }
  }
  return 0.0;
}

double SeverityModel::factor_loglik(const Factor& f, std::span<const double> u,
                                    std::vector<std::size_t>* touched) const {
  return evaluate_item(spec_.evidence[f.item], f.ages, LazyView{*this, u, touched});
}

void SeverityModel::bind_evidence() {
  const std::vector<double> origin(priors_.dimension(), 0.0);
  for (std::size_t i = 0; i < spec_.evidence.size(); ++i) {
    const auto& item = spec_.evidence[i];
    const bool modelled = std::find(waves_.begin(), waves_.end(), item.wave) != waves_.end();
    const bool sero_reference = item.kind == EvidenceKind::SeroSample && item.wave == reference_wave();
    if (!modelled && !sero_reference)
      throw ConfigError("evidence " + item.label() + " refers to wave " + std::to_string(item.wave) +
                        ", which variant " + std::string(to_string(spec_.variant)) + " does not model");
    Factor f;
    f.item = i;
    try {
      f.ages = resolve_band(item, spec_.grid, agg_);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("unbound evidence: ") + e.what());
    }
    std::vector<std::size_t> touched;
    factor_loglik(f, origin, &touched);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    f.params = std::move(touched);
    factors_.push_back(std::move(f));
  }
  block_factors_.assign(blocks_.size(), {});
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
      const auto& ps = factors_[fi].params;
      if (std::binary_search(ps.begin(), ps.end(), block_param_[b])) block_factors_[b].push_back(fi);
    }
}

void SeverityModel::check_completeness() {
  auto has = [&](EvidenceKind kind, std::optional<int> wave = std::nullopt) {
    return std::any_of(spec_.evidence.begin(), spec_.evidence.end(), [&](const EvidenceItem& e) {
      return e.kind == kind && (!wave || e.wave == *wave);
    });
  };
  switch (spec_.variant) {
    case Variant::A:
      if (!has(EvidenceKind::SeroSample)) warnings_.push_back("variant A without sero-prevalence samples");
      if (!has(EvidenceKind::LogNormalEstimate))
        warnings_.push_back("variant A without log-normal symptomatic estimates");
      break;
    case Variant::B:
      if (!has(EvidenceKind::NormalLogCount)) warnings_.push_back("variant B without normal log-count summaries");
      break;
    case Variant::C:
      for (int w : waves_)
        if (std::none_of(spec_.evidence.begin(), spec_.evidence.end(),
                         [&](const EvidenceItem& e) { return e.wave == w; }))
          warnings_.push_back("variant C without evidence for wave " + std::to_string(w));
      break;
  }
}

void SeverityModel::build_quantity_names() {
  quantity_names_ = functional_names(waves_, spec_.grid.size());
  const std::set<std::string> present(quantity_names_.begin(), quantity_names_.end());
  const auto natural = priors_.natural_names();
  for (std::size_t i = 0; i < natural.size(); ++i)
    if (!present.count(natural[i])) {
      quantity_names_.push_back(natural[i]);
      extra_components_.push_back(i);
    }
}

std::vector<std::string> functional_names(std::span<const int> waves, std::size_t n_ages) {
  std::vector<std::string> out;
  for (int w : waves)
    for (std::size_t a = 0; a < n_ages; ++a)
      for (const auto& s : kCellSymbols) out.push_back(quantity_name(s, w, a));
  for (int w : waves)
    for (const auto& s : kAllAgeSymbols) out.push_back(quantity_name_all(s, w));
  for (int w : waves)
    for (const char* s : {"d_h", "d_i", "d_d"}) out.push_back(quantity_name(s, w, std::nullopt));
  return out;
}

void functional_values(const PyramidState& st, const AgeGrid& grid, std::span<double> out) {
  const auto risks = compute_risks(st.cond);
  const auto& waves = st.cond.waves();
  const std::size_t na = grid.size();
  std::size_t k = 0;
  for (int w : waves)
    for (std::size_t a = 0; a < na; ++a) {
      const auto& c = st.cond.at(w, a);
      const auto& r = risks.at(w, a);
      const auto& n = st.counts.at(w, a);
      for (double x : {c.iar, c.s_given_inf, c.h_given_s, c.i_given_h, c.d_given_h, r.sar, r.chr, r.cir, r.cfr,
                       r.schr, r.scir, r.scfr, n[0], n[1], n[2], n[3], n[4], st.detection.symptomatic(w, a),
                       st.prevalence(w, a)})
        out[k++] = x;
    }
  for (int w : waves) {
    std::array<double, 5> n{};
    double pop = 0.0, prev = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t l = 0; l < 5; ++l) n[l] += st.counts.at(w, a)[l];
      pop += grid.population(a);
      prev += grid.population(a) * st.prevalence(w, a);
    }
    // Infection-weighted: ratios of summed counts.
    for (double x : {n[0] / pop, n[1] / n[0], n[2] / n[1], n[3] / n[2], n[4] / n[2], n[1] / pop, n[2] / n[0],
                     n[3] / n[0], n[4] / n[0], n[2] / n[1], n[3] / n[1], n[4] / n[1], n[0], n[1], n[2], n[3], n[4],
                     prev / pop})
      out[k++] = x;
  }
  for (int w : waves)
    for (auto l : {SeverityLevel::H, SeverityLevel::I, SeverityLevel::D}) out[k++] = st.detection.severe(w, l);
}

PyramidState SeverityModel::decode(std::span<const double> u) const {
  const std::size_t na = spec_.grid.size();
  PyramidState st;
  st.cond = ConditionalProbs(waves_, na);
  st.detection = DetectionProbs(waves_, na);
  for (std::size_t wi = 0; wi < waves_.size(); ++wi) {
    const int w = waves_[wi];
    for (std::size_t a = 0; a < na; ++a) {
      auto& c = st.cond.at(w, a);
      const auto& r = cell_refs_[wi][a];
      c.iar = value(r[kIar], u, nullptr);
      c.s_given_inf = value(r[kCs], u, nullptr);
      c.h_given_s = value(r[kCh], u, nullptr);
      c.i_given_h = value(r[kCi], u, nullptr);
      c.d_given_h = value(r[kCd], u, nullptr);
      st.detection.symptomatic(w, a) = value(r[kDs], u, nullptr);
    }
    st.detection.severe(w, SeverityLevel::H) = value(severe_refs_[wi][0], u, nullptr);
    st.detection.severe(w, SeverityLevel::I) = value(severe_refs_[wi][1], u, nullptr);
    st.detection.severe(w, SeverityLevel::D) = value(severe_refs_[wi][2], u, nullptr);
  }
  st.counts = compute_latent_counts(st.cond, spec_.grid);
  st.reference_wave = reference_wave();
  for (std::size_t a = 0; a < na; ++a) st.reference_prevalence.push_back(value(reference_refs_[a], u, nullptr));
  return st;
}

double SeverityModel::log_prior(std::span<const double> u) const { return log_prior_density(u, priors_); }

double SeverityModel::log_likelihood(std::span<const double> u) const {
  double total = 0.0;
  for (const auto& f : factors_) {
    const double term = factor_loglik(f, u, nullptr);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

double SeverityModel::log_density(std::span<const double> u) const {
  const double lp = log_prior(u);
  if (!std::isfinite(lp)) return lp;
  return lp + log_likelihood(u);
}

double SeverityModel::block_log_density(std::size_t block, std::span<const double> u) const {
  double total = priors_.log_density(block_param_[block], u);
  for (auto fi : block_factors_[block]) {
    const double term = factor_loglik(factors_[fi], u, nullptr);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

void SeverityModel::sample_initial(Rng& rng, std::span<double> u) const {
  priors_.sample(rng, u);
  constexpr int kRepairRounds = 2000;
  for (int round = 0; round < kRepairRounds; ++round) {
    const auto bad = std::find_if(factors_.begin(), factors_.end(), [&](const Factor& f) {
      return !std::isfinite(factor_loglik(f, u, nullptr));
    });
    if (bad == factors_.end()) return;
    for (auto p : bad->params) priors_.sample_one(p, rng, u);
  }
}

std::string SeverityModel::explain_nonfinite(std::span<const double> u) const {
  for (std::size_t p = 0; p < priors_.size(); ++p)
    if (!std::isfinite(priors_.log_density(p, u)))
      return "prior density of parameter '" + priors_.parameter(p).name + "' is not finite";
  for (const auto& f : factors_) {
    const double term = factor_loglik(f, u, nullptr);
    if (!std::isfinite(term)) {
      std::string params;
      for (auto p : f.params) params += (params.empty() ? "" : ", ") + priors_.parameter(p).name;
      return "evidence " + spec_.evidence[f.item].label() + " has log-likelihood " + text::format_double(term) +
             " (depends on " + params + ")";
    }
  }
  return "log density is finite";
}

void SeverityModel::quantities(std::span<const double> u, std::span<double> out) const {
  if (out.size() != quantity_names_.size()) throw std::invalid_argument("quantities: output size mismatch");
  const std::size_t n_functional = quantity_names_.size() - extra_components_.size();
  functional_values(decode(u), spec_.grid, out.first(n_functional));
  if (!extra_components_.empty()) {
    const auto natural = priors_.natural(u);
    std::size_t k = n_functional;
    for (auto i : extra_components_) out[k++] = natural[i];
  }
}

std::vector<ManifestRow> SeverityModel::manifest() const {
  std::vector<ManifestRow> out;
  for (const auto& p : priors_.parameters())
    out.push_back({p.name, std::string(to_string(transform_for(p.prior))), describe(p.prior), p.size});
  return out;
}

std::vector<std::string> SeverityModel::symbol_audit() const {
  std::set<std::string> out;
  for (const auto& name : priors_.natural_names()) {
    const auto q = parse_quantity_name(name);
    out.insert(q.wave ? q.symbol + wave_suffix(*q.wave) : q.symbol);
  }
  return {out.begin(), out.end()};
}

double link_third_wave(double second_logit, double tau, double innovation) { return second_logit + tau * innovation; }

std::pair<double, double> odds_ratio_interval(double tau, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("odds_ratio_interval: level must lie in (0,1)");
  const double z = boost::math::quantile(boost::math::normal_distribution<>(), 0.5 + level / 2.0);
  return {std::exp(-z * tau), std::exp(z * tau)};
}

PriorOverrides TransferPriors::overrides() const {
  PriorOverrides out;
  for (const auto& e : entries) out.set(e.parameter, e.prior);
  return out;
}

TransferPriors two_stage_transfer(const PosteriorSummary& stage1, const AgeGrid& grid) {
  TransferPriors out;
  auto moments = [&](const std::string& quantity, const std::string& band) {
    const auto* row = stage1.find(quantity);
    if (!row) throw ConfigError("stage-1 summary lacks '" + quantity + "' (age band " + band + ")");
    return std::pair{row->mean, row->sd};
  };
  auto matched = [&](const std::string& quantity, const std::string& band, double mean, double sd) {
    try {
      return moment_match_beta(mean, sd);
    } catch (const ConfigError& e) {
      throw ConfigError("stage-1 transfer for " + quantity + " (age band " + band + "): " + e.what());
    }
  };
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const auto A = age_suffix(a);
    const auto& band = grid.label(a);
    {
      const std::string q = "prev.w2" + A;
      const auto [m, s] = moments(q, band);
      const auto beta = matched(q, band, m, s);
      const auto dir = third_wave_dirichlet(beta.alpha, beta.beta);
      const double c0 = dir.concentration[0];
      out.entries.push_back({"prev" + A, dir, q, m, s, c0 / (c0 + 2.0)});
    }
    for (const char* sym : {"c_s_inf", "c_h_s", "c_i_h", "c_d_h"}) {
      const std::string q = std::string(sym) + ".w2" + A;
      const auto [m, s] = moments(q, band);
      const auto beta = matched(q, band, m, s);
      out.entries.push_back({std::string(sym) + ".w3" + A, beta, q, m, s, beta.alpha / (beta.alpha + beta.beta)});
    }
  }
  return out;
}

void write_transfer(const std::filesystem::path& path, const TransferPriors& transfer) {
  CsvWriter out(path);
  out.row({"parameter", "prior", "source", "stage1_mean", "stage1_sd", "induced_mean"});
  for (const auto& e : transfer.entries)
    out.row({e.parameter, describe(e.prior), e.source, text::format_double(e.stage1_mean),
             text::format_double(e.stage1_sd), text::format_double(e.induced_mean)});
}

TransferPriors load_transfer(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_param = table.require_column("parameter");
  const auto c_prior = table.require_column("prior");
  const auto c_source = table.column("source");
  const auto c_mean = table.column("stage1_mean");
  const auto c_sd = table.column("stage1_sd");
  const auto c_induced = table.column("induced_mean");
  TransferPriors out;
  for (const auto& r : table.rows()) {
    TransferEntry e;
    e.parameter = r.fields[c_param];
    try {
      e.prior = parse_prior(r.fields[c_prior]);
    } catch (const ConfigError& err) {
      throw DataError(table.source(), r.line, err.what());
    }
    auto num = [&](std::optional<std::size_t> c) {
      if (!c || r.fields[*c].empty()) return 0.0;
      const auto v = text::to_double(r.fields[*c]);
      if (!v) throw DataError(table.source(), r.line, "cannot parse '" + r.fields[*c] + "' as a number");
      return *v;
    };
    if (c_source) e.source = r.fields[*c_source];
    e.stage1_mean = num(c_mean);
    e.stage1_sd = num(c_sd);
    e.induced_mean = num(c_induced);
    out.entries.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> select_quantities(const SeverityModel& model, std::span<const std::string> monitor) {
  const auto& all = model.quantity_names();
  for (const auto& pattern : monitor)
    if (std::none_of(all.begin(), all.end(), [&](const std::string& n) { return text::wildcard_match(pattern, n); }))
      throw ConfigError("monitor pattern '" + pattern + "' matches no quantity");
  std::vector<std::string> out;
  for (const auto& n : all)
    if (std::any_of(monitor.begin(), monitor.end(),
                    [&](const std::string& pattern) { return text::wildcard_match(pattern, n); }))
      out.push_back(n);
  return out;
}

DrawTable functional_report(const SeverityModel& model, const RunResult& run, std::span<const std::string> names) {
  const auto& all = model.quantity_names();
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto it = std::find(all.begin(), all.end(), n);
    if (it == all.end()) throw ConfigError("unknown quantity '" + n + "'");
    idx.push_back(static_cast<std::size_t>(it - all.begin()));
  }
  DrawTable table;
  table.names.assign(names.begin(), names.end());
  std::vector<double> buf(all.size());
  for (const auto& chain : run.chains) {
    std::vector<double> rows;
    rows.reserve(chain.size() * idx.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      model.quantities(chain.draw(i), buf);
      for (auto j : idx) rows.push_back(buf[j]);
    }
    table.chains.push_back(std::move(rows));
  }
  return table;
}

FitResult fit(const SeverityModel& model, const RunProtocol& protocol, std::span<const std::uint64_t> seeds,
              std::span<const std::string> monitor) {
  FitResult out;
  out.run = run(model, protocol, seeds);
  out.draws = functional_report(model, out.run, select_quantities(model, monitor));
  return out;
}

}  // namespace sevsyn
