#pragma once

// Prior families for the basic parameters and the parameter layout the
// sampler moves in. Every basic parameter owns one prior; the prior's family
// fixes its transform to unconstrained space.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sevsyn/random.hpp"
#include "sevsyn/transforms.hpp"

namespace sevsyn {

struct BetaSpec {
  double alpha = 1;
  double beta = 1;
  std::string target;  // parameter path it constrains, informational
};

struct DirichletSpec {
  std::vector<double> concentration;
  std::vector<std::string> component_roles;  // last role is the remainder
};

struct UniformSpec {
  double lower = 0;
  double upper = 1;
};

struct NormalSpec {
  double mean = 0;
  double sd = 1;
};

struct LogNormalSpec {
  double meanlog = 0;
  double sdlog = 1;
};

/// Point mass: the parameter is held at `value` and not sampled.
struct FixedSpec {
  double value = 0;
};

using PriorSpec = std::variant<BetaSpec, DirichletSpec, UniformSpec, NormalSpec, LogNormalSpec, FixedSpec>;

/// Parses "beta(a,b)", "uniform", "uniform(l,u)", "normal(m,s)",
/// "lognormal(m,s)", "fixed(v)" and "dirichlet(a1,...,aK)".
PriorSpec parse_prior(std::string_view text);
std::string describe(const PriorSpec& prior);
/// Throws ConfigError when hyperparameters are out of range.
void validate(const PriorSpec& prior);

Transform transform_for(const PriorSpec& prior);
std::size_t natural_dimension(const PriorSpec& prior);
std::size_t unconstrained_dimension(const PriorSpec& prior);

/// Prior mean and variance of natural component `component`.
struct Moments {
  double mean;
  double variance;
};
Moments prior_moments(const PriorSpec& prior, std::size_t component = 0);

/// Log density on the natural scale, without any transform correction.
double natural_log_density(const PriorSpec& prior, std::span<const double> x);

struct BasicParameter {
  std::string name;
  PriorSpec prior;
  std::vector<std::string> components;  // natural component names
  std::size_t offset = 0;               // into the unconstrained vector
  std::size_t size = 0;                 // unconstrained dimension
};

/// Ordered set of basic parameters with their priors and the layout of the
/// unconstrained vector.
class PriorSet {
 public:
  /// Adds a parameter; `components` defaults to {name} for scalar priors and
  /// is required for Dirichlet blocks. Returns the parameter index.
  std::size_t add(std::string name, PriorSpec prior, std::vector<std::string> components = {});

  const std::vector<BasicParameter>& parameters() const { return params_; }
  const BasicParameter& parameter(std::size_t p) const { return params_.at(p); }
  std::size_t size() const { return params_.size(); }
  std::size_t dimension() const { return dimension_; }
  std::optional<std::size_t> find(std::string_view name) const;

  /// Natural value of a scalar parameter at unconstrained position `u`.
  double scalar(std::size_t p, std::span<const double> u) const;
  /// Unconstrained coordinate of a Logit-transformed scalar parameter, i.e.
  /// logit of its natural value, read without round trip when sampled.
  double logit_value(std::size_t p, std::span<const double> u) const;
  /// Natural values of a Dirichlet block at `u` (size = components).
  void simplex(std::size_t p, std::span<const double> u, std::span<double> out) const;
  /// All natural component values, in parameter order.
  std::vector<double> natural(std::span<const double> u) const;
  std::vector<std::string> natural_names() const;

  /// Prior log density of parameter p in unconstrained space, including the
  /// log-Jacobian of its transform.
  double log_density(std::size_t p, std::span<const double> u) const;

  /// Maps natural values of parameter p into its unconstrained coordinates.
  void to_unconstrained(std::size_t p, std::span<const double> natural, std::span<double> u) const;
  /// Draws every parameter from its prior into unconstrained coordinates.
  void sample(Rng& rng, std::span<double> u) const;
  /// Draws parameter p alone from its prior.
  void sample_one(std::size_t p, Rng& rng, std::span<double> u) const;

 private:
  std::vector<BasicParameter> params_;
  std::size_t dimension_ = 0;
};

/// Sum of the per-parameter log densities at `u`, transform corrections
/// included. Throws ConfigError if `u` has the wrong dimension.
double log_prior_density(std::span<const double> u, const PriorSet& priors);

/// Beta(alpha, beta) with the given mean and standard deviation.
/// Requires sd^2 < mean (1 - mean).
BetaSpec moment_match_beta(double mean, double sd);

/// Dirichlet(2x/y, 1, 1) over (post-wave-2 prevalence, wave-3 attack rate,
/// remainder), built from a Beta(x, y) fit to the stage-one prevalence.
DirichletSpec third_wave_dirichlet(double x, double y);

/// Named attack-rate priors over (IAR1, IAR2, remainder): flat, d226,
/// d267_133, d133_267.
DirichletSpec sensitivity_prior(std::string_view name);

}  // namespace sevsyn
