#include "sevsyn/special.hpp"

#include <numbers>

namespace sevsyn {

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_beta_fn(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double beta_log_pdf(double x, double alpha, double beta) {
  if (!(x >= 0.0 && x <= 1.0)) return kNegInf;
  if ((x == 0.0 && alpha < 1.0) || (x == 1.0 && beta < 1.0)) return std::numeric_limits<double>::infinity();
  if ((x == 0.0 && alpha > 1.0) || (x == 1.0 && beta > 1.0)) return kNegInf;
  return xlogy(alpha - 1.0, x) + xlogy(beta - 1.0, 1.0 - x) - log_beta_fn(alpha, beta);
}

double lognormal_log_pdf(double x, double meanlog, double sdlog) {
  if (!(x > 0.0)) return kNegInf;
  return normal_log_pdf(std::log(x), meanlog, sdlog) - std::log(x);
}

double dirichlet_log_pdf(std::span<const double> x, std::span<const double> concentration) {
  double total_conc = 0.0;
  double out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) return kNegInf;
    total_conc += concentration[i];
    out += xlogy(concentration[i] - 1.0, x[i]) - log_gamma(concentration[i]);
  }
  return out + log_gamma(total_conc);
}

double binomial_log_pmf(double k, double n, double p) {
  if (k < 0.0 || n < 0.0 || !(p >= 0.0 && p <= 1.0)) return kNegInf;
  if (k > n) return kNegInf;
  if (p == 0.0) return k == 0.0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == n ? 0.0 : kNegInf;
  return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

double neg_binomial_log_pmf(double k, double mean, double size) {
  if (k < 0.0) return kNegInf;
  if (mean == 0.0) return k == 0.0 ? 0.0 : kNegInf;
  // log(size / (size + mean)) and log(mean / (size + mean)), stable for large size.
  const double log_q = -std::log1p(mean / size);
  const double log_p = std::log(mean) - std::log(size + mean);
  return log_gamma(k + size) - log_gamma(size) - log_gamma(k + 1.0) + size * log_q + k * log_p;
}

double poisson_log_pmf(double k, double mean) {
  if (k < 0.0) return kNegInf;
  if (mean == 0.0) return k == 0.0 ? 0.0 : kNegInf;
  return k * std::log(mean) - mean - log_gamma(k + 1.0);
}

}  // namespace sevsyn
