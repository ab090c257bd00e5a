#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace sevsyn {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// log Gamma(x) for x > 0. Reentrant (does not touch the global signgam).
double log_gamma(double x);

double log_beta_fn(double a, double b);

/// x * log(y) with the convention 0 * log(0) = 0.
inline double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(y);
}

// Log densities / mass functions on the natural scale.

double normal_log_pdf(double x, double mean, double sd);
double beta_log_pdf(double x, double alpha, double beta);
double lognormal_log_pdf(double x, double meanlog, double sdlog);
/// Dirichlet log density at a point of the simplex (all components in (0,1)).
double dirichlet_log_pdf(std::span<const double> x, std::span<const double> concentration);

/// Binomial log pmf with real-valued size via the log-Gamma extension.
/// Returns -inf when k > n or when p in {0, 1} contradicts the data.
double binomial_log_pmf(double k, double n, double p);

/// Negative binomial log pmf parameterized by mean and size (dispersion):
/// variance = mean + mean^2 / size.
double neg_binomial_log_pmf(double k, double mean, double size);

double poisson_log_pmf(double k, double mean);

}  // namespace sevsyn
