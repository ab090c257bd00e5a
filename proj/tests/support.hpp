#pragma once

// Small targets with analytic posteriors, shared by unit and acceptance tests.

#include <cmath>
#include <span>
#include <vector>

#include "sevsyn/random.hpp"
#include "sevsyn/sampler.hpp"
#include "sevsyn/special.hpp"

namespace sevsyn::testing {

/// p ~ Beta(a, b), k successes of n, sampled on the logit scale.
/// The posterior of p is Beta(a + k, b + n - k).
class BetaBinomialTarget : public Target {
 public:
  BetaBinomialTarget(double a, double b, double k, double n) : a_(a), b_(b), k_(k), n_(n) {}

  std::size_t dimension() const override { return 1; }
  const std::vector<BlockInfo>& blocks() const override { return blocks_; }
  double log_density(std::span<const double> x) const override {
    const double lp = -log1p_exp(-x[0]);
    const double lq = -log1p_exp(x[0]);
    return (a_ + k_) * lp + (b_ + n_ - k_) * lq;
  }
  void sample_initial(Rng& rng, std::span<double> x) const override { x[0] = logit(rng.beta(a_, b_)); }

 private:
  double a_, b_, k_, n_;
  std::vector<BlockInfo> blocks_{{"logit_p", 0, 1}};
};

/// Independent normals, one scalar block per coordinate.
class NormalTarget : public Target {
 public:
  NormalTarget(std::vector<double> mean, std::vector<double> sd) : mean_(std::move(mean)), sd_(std::move(sd)) {
    for (std::size_t i = 0; i < mean_.size(); ++i) blocks_.push_back({"x" + std::to_string(i), i, 1});
  }

  std::size_t dimension() const override { return mean_.size(); }
  const std::vector<BlockInfo>& blocks() const override { return blocks_; }
  double log_density(std::span<const double> x) const override {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = (x[i] - mean_[i]) / sd_[i];
      s -= 0.5 * z * z;
    }
    return s;
  }
  void sample_initial(Rng& rng, std::span<double> x) const override {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = mean_[i] + sd_[i] * rng.normal();
  }

 private:
  std::vector<double> mean_, sd_;
  std::vector<BlockInfo> blocks_;
};

/// Pooled draws of coordinate `i` from every chain.
inline std::vector<double> pooled(const RunResult& run, std::size_t i) {
  std::vector<double> out;
  for (const auto& c : run.chains)
    for (std::size_t d = 0; d < c.size(); ++d) out.push_back(c.draw(d)[i]);
  return out;
}

}  // namespace sevsyn::testing
