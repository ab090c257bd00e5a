#include "sevsyn/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sevsyn/errors.hpp"
#include "sevsyn/special.hpp"
#include "sevsyn/text.hpp"

namespace sevsyn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log(inv_logit(u)) and log(1 - inv_logit(u)), stable in both tails.
double log_inv_logit(double u) { return -log1p_exp(-u); }
double log1m_inv_logit(double u) { return -log1p_exp(u); }

// Arguments may be separated by ',' or ';' (the form describe() emits).
std::vector<double> parse_args(std::string_view text, std::string_view family) {
  std::string normalized(text);
  std::replace(normalized.begin(), normalized.end(), ';', ',');
  std::vector<double> out;
  for (const auto& field : text::split_list(normalized)) {
    const auto v = text::to_double(field);
    if (!v) throw ConfigError("prior " + std::string(family) + ": cannot parse '" + field + "' as a number");
    out.push_back(*v);
  }
  return out;
}

void require_arity(const std::vector<double>& args, std::size_t n, std::string_view family) {
  if (args.size() != n)
    throw ConfigError("prior " + std::string(family) + " takes " + std::to_string(n) + " argument(s), got " +
                      std::to_string(args.size()));
}

}  // namespace

PriorSpec parse_prior(std::string_view raw) {
  const auto s = text::trim(raw);
  const auto open = s.find('(');
  const std::string family(text::trim(s.substr(0, open)));
  std::vector<double> args;
  if (open != std::string_view::npos) {
    if (s.back() != ')') throw ConfigError("prior '" + std::string(s) + "': missing ')'");
    args = parse_args(s.substr(open + 1, s.size() - open - 2), family);
  }
  PriorSpec out;
  if (family == "beta") {
    require_arity(args, 2, family);
    out = BetaSpec{args[0], args[1], {}};
  } else if (family == "uniform") {
    if (args.empty()) args = {0.0, 1.0};
    require_arity(args, 2, family);
    out = UniformSpec{args[0], args[1]};
  } else if (family == "normal") {
    require_arity(args, 2, family);
    out = NormalSpec{args[0], args[1]};
  } else if (family == "lognormal") {
    require_arity(args, 2, family);
    out = LogNormalSpec{args[0], args[1]};
  } else if (family == "fixed") {
    require_arity(args, 1, family);
    out = FixedSpec{args[0]};
  } else if (family == "dirichlet") {
    out = DirichletSpec{args, {}};
  } else {
    throw ConfigError("unknown prior family '" + family + "' in '" + std::string(s) + "'");
  }
  validate(out);
  return out;
}

std::string describe(const PriorSpec& prior) {
  using text::format_double;
  return std::visit(
      Overloaded{
          [](const BetaSpec& b) { return "beta(" + format_double(b.alpha) + ";" + format_double(b.beta) + ")"; },
          [](const DirichletSpec& d) {
            std::string s = "dirichlet(";
            for (std::size_t i = 0; i < d.concentration.size(); ++i)
              s += (i ? ";" : "") + format_double(d.concentration[i]);
            return s + ")";
          },
          [](const UniformSpec& u) {
            return "uniform(" + format_double(u.lower) + ";" + format_double(u.upper) + ")";
          },
          [](const NormalSpec& n) { return "normal(" + format_double(n.mean) + ";" + format_double(n.sd) + ")"; },
          [](const LogNormalSpec& n) {
            return "lognormal(" + format_double(n.meanlog) + ";" + format_double(n.sdlog) + ")";
          },
          [](const FixedSpec& f) { return "fixed(" + format_double(f.value) + ")"; },
      },
      prior);
}

void validate(const PriorSpec& prior) {
  std::visit(Overloaded{
                 [](const BetaSpec& b) {
                   if (!(b.alpha > 0 && b.beta > 0)) throw ConfigError("beta prior needs alpha > 0 and beta > 0");
                 },
                 [](const DirichletSpec& d) {
                   if (d.concentration.size() < 2) throw ConfigError("dirichlet prior needs at least 2 components");
                   for (double c : d.concentration)
                     if (!(c > 0)) throw ConfigError("dirichlet concentrations must be > 0");
                 },
                 [](const UniformSpec& u) {
                   if (!(u.lower < u.upper)) throw ConfigError("uniform prior needs lower < upper");
                 },
                 [](const NormalSpec& n) {
                   if (!(n.sd > 0)) throw ConfigError("normal prior needs sd > 0");
                 },
                 [](const LogNormalSpec& n) {
                   if (!(n.sdlog > 0)) throw ConfigError("lognormal prior needs sdlog > 0");
                 },
                 [](const FixedSpec& f) {
                   if (!std::isfinite(f.value)) throw ConfigError("fixed prior needs a finite value");
                 },
             },
             prior);
}

Transform transform_for(const PriorSpec& prior) {
  return std::visit(Overloaded{
                        [](const BetaSpec&) { return Transform::Logit; },
                        [](const DirichletSpec&) { return Transform::StickBreaking; },
                        [](const UniformSpec&) { return Transform::Logit; },
                        [](const NormalSpec&) { return Transform::Identity; },
                        [](const LogNormalSpec&) { return Transform::Log; },
                        [](const FixedSpec&) { return Transform::None; },
                    },
                    prior);
}

std::size_t natural_dimension(const PriorSpec& prior) {
  if (const auto* d = std::get_if<DirichletSpec>(&prior)) return d->concentration.size();
  return 1;
}

std::size_t unconstrained_dimension(const PriorSpec& prior) {
  if (const auto* d = std::get_if<DirichletSpec>(&prior)) return d->concentration.size() - 1;
  if (std::holds_alternative<FixedSpec>(prior)) return 0;
  return 1;
}

Moments prior_moments(const PriorSpec& prior, std::size_t component) {
  return std::visit(Overloaded{
                        [](const BetaSpec& b) {
                          const double s = b.alpha + b.beta;
                          return Moments{b.alpha / s, b.alpha * b.beta / (s * s * (s + 1))};
                        },
                        [component](const DirichletSpec& d) {
                          const double total = std::accumulate(d.concentration.begin(), d.concentration.end(), 0.0);
                          const double a = d.concentration.at(component);
                          return Moments{a / total, a * (total - a) / (total * total * (total + 1))};
                        },
                        [](const UniformSpec& u) {
                          const double w = u.upper - u.lower;
                          return Moments{u.lower + 0.5 * w, w * w / 12.0};
                        },
                        [](const NormalSpec& n) { return Moments{n.mean, n.sd * n.sd}; },
                        [](const LogNormalSpec& n) {
                          const double s2 = n.sdlog * n.sdlog;
                          return Moments{std::exp(n.meanlog + 0.5 * s2),
                                         (std::exp(s2) - 1) * std::exp(2 * n.meanlog + s2)};
                        },
                        [](const FixedSpec& f) { return Moments{f.value, 0.0}; },
                    },
                    prior);
}

double natural_log_density(const PriorSpec& prior, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const BetaSpec& b) { return beta_log_pdf(x[0], b.alpha, b.beta); },
                        [&](const DirichletSpec& d) {
                          double sum = 0.0;
                          for (double v : x) sum += v;
                          if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
                          return dirichlet_log_pdf(x, d.concentration);
                        },
                        [&](const UniformSpec& u) {
                          if (!(x[0] >= u.lower && x[0] <= u.upper)) return kNegInf;
                          return -std::log(u.upper - u.lower);
                        },
                        [&](const NormalSpec& n) { return normal_log_pdf(x[0], n.mean, n.sd); },
                        [&](const LogNormalSpec& n) { return lognormal_log_pdf(x[0], n.meanlog, n.sdlog); },
                        [&](const FixedSpec& f) { return x[0] == f.value ? 0.0 : kNegInf; },
                    },
                    prior);
}

std::size_t PriorSet::add(std::string name, PriorSpec prior, std::vector<std::string> components) {
  validate(prior);
  if (find(name)) throw ConfigError("duplicate parameter '" + name + "'");
  const std::size_t k = natural_dimension(prior);
  if (components.empty()) {
    if (k != 1) throw ConfigError("parameter '" + name + "': a " + std::to_string(k) + "-component prior needs component names");
    components = {name};
  }
  if (components.size() != k)
    throw ConfigError("parameter '" + name + "': prior has " + std::to_string(k) + " components but " +
                      std::to_string(components.size()) + " names were given");
  if (auto* d = std::get_if<DirichletSpec>(&prior); d && d->component_roles.empty()) d->component_roles = components;
  BasicParameter p{std::move(name), std::move(prior), std::move(components), dimension_, 0};
  p.size = unconstrained_dimension(p.prior);
  dimension_ += p.size;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

std::optional<std::size_t> PriorSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

double PriorSet::scalar(std::size_t p, std::span<const double> u) const {
  const auto& param = params_[p];
  return std::visit(Overloaded{
                        [&](const BetaSpec&) { return inv_logit(u[param.offset]); },
                        [&](const DirichletSpec&) -> double {
                          throw std::logic_error("scalar() called on simplex parameter " + param.name);
                        },
                        [&](const UniformSpec& s) {
                          return s.lower + (s.upper - s.lower) * inv_logit(u[param.offset]);
                        },
                        [&](const NormalSpec&) { return u[param.offset]; },
                        [&](const LogNormalSpec&) { return std::exp(u[param.offset]); },
                        [&](const FixedSpec& f) { return f.value; },
                    },
                    param.prior);
}

double PriorSet::logit_value(std::size_t p, std::span<const double> u) const {
  const auto& param = params_[p];
  if (std::holds_alternative<BetaSpec>(param.prior)) return u[param.offset];
  if (const auto* s = std::get_if<UniformSpec>(&param.prior); s && s->lower == 0.0 && s->upper == 1.0)
    return u[param.offset];
  return logit(scalar(p, u));
}

void PriorSet::simplex(std::size_t p, std::span<const double> u, std::span<double> out) const {
  const auto& param = params_[p];
  stick_breaking::to_simplex(u.subspan(param.offset, param.size), out);
}

std::vector<double> PriorSet::natural(std::span<const double> u) const {
  std::vector<double> out;
  for (std::size_t p = 0; p < params_.size(); ++p) {
    if (std::holds_alternative<DirichletSpec>(params_[p].prior)) {
      std::vector<double> x(params_[p].components.size());
      simplex(p, u, x);
      out.insert(out.end(), x.begin(), x.end());
    } else {
      out.push_back(scalar(p, u));
    }
  }
  return out;
}

std::vector<std::string> PriorSet::natural_names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.insert(out.end(), p.components.begin(), p.components.end());
  return out;
}

double PriorSet::log_density(std::size_t p, std::span<const double> u) const {
  const auto& param = params_[p];
  return std::visit(
      Overloaded{
          [&](const BetaSpec& b) {
            const double x = u[param.offset];
            // Beta density times the logit Jacobian x(1-x).
            return b.alpha * log_inv_logit(x) + b.beta * log1m_inv_logit(x) - log_beta_fn(b.alpha, b.beta);
          },
          [&](const DirichletSpec& d) {
            const auto y = u.subspan(param.offset, param.size);
            std::vector<double> x(d.concentration.size());
            stick_breaking::to_simplex(y, x);
            return dirichlet_log_pdf(x, d.concentration) + stick_breaking::log_abs_det_jacobian(y);
          },
          [&](const UniformSpec&) {
            const double x = u[param.offset];
            return log_inv_logit(x) + log1m_inv_logit(x);
          },
          [&](const NormalSpec& n) { return normal_log_pdf(u[param.offset], n.mean, n.sd); },
          [&](const LogNormalSpec& n) { return normal_log_pdf(u[param.offset], n.meanlog, n.sdlog); },
          [&](const FixedSpec&) { return 0.0; },
      },
      param.prior);
}

void PriorSet::to_unconstrained(std::size_t p, std::span<const double> natural, std::span<double> u) const {
  const auto& param = params_[p];
  std::visit(Overloaded{
                 [&](const BetaSpec&) { u[param.offset] = logit(natural[0]); },
                 [&](const DirichletSpec&) {
                   stick_breaking::to_unconstrained(natural, u.subspan(param.offset, param.size));
                 },
                 [&](const UniformSpec& s) {
                   u[param.offset] = logit((natural[0] - s.lower) / (s.upper - s.lower));
                 },
                 [&](const NormalSpec&) { u[param.offset] = natural[0]; },
                 [&](const LogNormalSpec&) { u[param.offset] = std::log(natural[0]); },
                 [&](const FixedSpec&) {},
             },
             param.prior);
}

void PriorSet::sample(Rng& rng, std::span<double> u) const {
  for (std::size_t p = 0; p < params_.size(); ++p) sample_one(p, rng, u);
}

void PriorSet::sample_one(std::size_t p, Rng& rng, std::span<double> u) const {
  const auto& param = params_[p];
  // Redraw on the measure-zero boundary values a finite transform cannot map.
  auto interior = [](double v) { return v > 0.0 && v < 1.0; };
  std::visit(Overloaded{
                 [&](const BetaSpec& b) {
                   double x;
                   do x = rng.beta(b.alpha, b.beta);
                   while (!interior(x));
                   u[param.offset] = logit(x);
                 },
                 [&](const DirichletSpec& d) {
                   std::vector<double> x;
                   do x = rng.dirichlet(d.concentration);
                   while (!std::all_of(x.begin(), x.end(), interior));
                   stick_breaking::to_unconstrained(x, u.subspan(param.offset, param.size));
                 },
                 [&](const UniformSpec&) { u[param.offset] = logit(rng.uniform()); },
                 [&](const NormalSpec& n) { u[param.offset] = n.mean + n.sd * rng.normal(); },
                 [&](const LogNormalSpec& n) { u[param.offset] = n.meanlog + n.sdlog * rng.normal(); },
                 [&](const FixedSpec&) {},
             },
             param.prior);
}

double log_prior_density(std::span<const double> u, const PriorSet& priors) {
  if (u.size() != priors.dimension())
    throw ConfigError("parameter vector has dimension " + std::to_string(u.size()) + ", prior set expects " +
                      std::to_string(priors.dimension()));
  double total = 0.0;
  for (std::size_t p = 0; p < priors.size(); ++p) total += priors.log_density(p, u);
  return total;
}

BetaSpec moment_match_beta(double mean, double sd) {
  if (!(mean > 0.0 && mean < 1.0)) throw ConfigError("moment matching: mean must lie in (0,1), got " + text::format_double(mean));
  if (!(sd > 0.0)) throw ConfigError("moment matching: sd must be > 0, got " + text::format_double(sd));
  const double bound = mean * (1.0 - mean);
  if (!(sd * sd < bound))
    throw ConfigError("moment matching: variance " + text::format_double(sd * sd) +
                      " is not below the Beta feasibility bound mean*(1-mean) = " + text::format_double(bound));
  const double k = bound / (sd * sd) - 1.0;
  return BetaSpec{mean * k, (1.0 - mean) * k, {}};
}

DirichletSpec third_wave_dirichlet(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw ConfigError("third-wave Dirichlet needs x > 0 and y > 0");
  return DirichletSpec{{2.0 * x / y, 1.0, 1.0}, {"prev.w2", "iar.w3", "remainder"}};
}

DirichletSpec sensitivity_prior(std::string_view name) {
  const std::vector<std::string> roles{"iar.w1", "iar.w2", "remainder"};
  if (name == "flat") return {{1.0, 1.0, 1.0}, roles};
  if (name == "d226") return {{2.0, 2.0, 6.0}, roles};
  if (name == "d267_133") return {{2.67, 1.33, 6.0}, roles};
  if (name == "d133_267") return {{1.33, 2.67, 6.0}, roles};
  throw ConfigError("unknown sensitivity prior '" + std::string(name) + "' (expected flat, d226, d267_133 or d133_267)");
}

}  // namespace sevsyn
