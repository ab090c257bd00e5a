#include "sevsyn/diagnostics.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace sevsyn {

namespace {

// FFTW planning is not thread-safe.
std::mutex fftw_plan_mutex;

void check_shape(std::span<const std::vector<double>> chains) {
  if (chains.empty()) throw std::invalid_argument("diagnostics: no chains");
  const auto n = chains.front().size();
  if (n < 10) throw std::invalid_argument("diagnostics: chains need at least 10 draws");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("diagnostics: chains differ in length");
}

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double var_of(std::span<const double> x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

}  // namespace

Rhat rhat(std::span<const std::vector<double>> chains) {
  check_shape(chains);
  const std::size_t half = chains.front().size() / 2;
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    const std::span<const double> all(c);
    for (auto part : {all.first(half), all.last(half)}) {
      const double m = mean_of(part);
      means.push_back(m);
      vars.push_back(var_of(part, m));
    }
  }
  const double n = static_cast<double>(half);
  const double w = mean_of(vars);
  const double b = n * var_of(means, mean_of(means));
  if (!(w > 0.0)) {
    Rhat r;
    r.degenerate = true;
    r.value = b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return r;
  }
  const double var_plus = (n - 1.0) / n * w + b / n;
  return {std::sqrt(var_plus / w), false};
}

std::vector<double> autocovariance(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  const double m = mean_of(x);

  std::vector<double> buf(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] - m;
  auto* spec = fftw_alloc_complex(len / 2 + 1);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(fftw_plan_mutex);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.data(), spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, buf.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (std::size_t k = 0; k <= len / 2; ++k) {
    spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    spec[k][1] = 0.0;
  }
  fftw_execute(bwd);
  {
    std::lock_guard lock(fftw_plan_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(spec);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i] / (static_cast<double>(len) * n);
  return out;
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  check_shape(chains);
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const double total = static_cast<double>(m * n);

  std::vector<std::vector<double>> acov;
  std::vector<double> means;
  for (const auto& c : chains) {
    acov.push_back(autocovariance(c));
    means.push_back(mean_of(c));
  }
  double w = 0.0;
  for (const auto& a : acov) w += a[0] * n / (n - 1.0);
  w /= m;
  if (!(w > 0.0)) return total;
  const double b = m > 1 ? var_of(means, mean_of(means)) : 0.0;
  const double var_plus = w * (n - 1.0) / n + b;

  auto rho = [&](std::size_t t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return 1.0 - (w - s / m) / var_plus;
  };

  // Geyer: sum autocorrelation pairs while positive, enforcing monotonicity.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total / tau, total);
}

}  // namespace sevsyn
