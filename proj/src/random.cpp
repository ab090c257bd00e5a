#include "sevsyn/random.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <stdexcept>

namespace sevsyn {

double Rng::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

double Rng::gamma(double shape) {
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(*this);
}

double Rng::beta(double a, double b) {
  boost::random::beta_distribution<double> dist(a, b);
  return dist(*this);
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: invalid arguments");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(*this);
}

std::int64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0) return 0;
  boost::random::poisson_distribution<std::int64_t, double> dist(mean);
  return dist(*this);
}

std::int64_t Rng::negative_binomial(double mean, double size) {
  if (!(mean >= 0.0) || !(size > 0.0)) throw std::invalid_argument("negative_binomial: invalid arguments");
  if (mean == 0.0) return 0;
  return poisson(gamma(size) * mean / size);
}

std::vector<double> Rng::dirichlet(std::span<const double> concentration) {
  std::vector<double> out(concentration.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = gamma(concentration[i]);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t k = 0; k < n; ++k) {
    SplitMix64 sm(master ^ (0xd1b54a32d192ed03ULL * (k + 1)));
    seeds[k] = sm.next();
  }
  return seeds;
}

}  // namespace sevsyn
