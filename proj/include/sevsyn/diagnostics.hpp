#pragma once

// Convergence diagnostics on retained draws of one scalar quantity.
//
// Chains are split in half before comparison, so a single chain still yields
// two sequences. ESS follows the multi-chain Geyer initial-monotone-sequence
// estimator with autocovariances computed by FFT.

#include <span>
#include <vector>

namespace sevsyn {

struct Rhat {
  double value = 1.0;
  bool degenerate = false;  // no within-chain variance anywhere
};

/// Split potential scale reduction factor. All chains must have the same
/// length, at least 10. When every chain is constant the result is flagged
/// degenerate and equals 1 if the constants agree, +inf otherwise.
Rhat rhat(std::span<const std::vector<double>> chains);

/// Effective sample size, capped at the number of draws. Constant draws give
/// the number of draws.
double effective_sample_size(std::span<const std::vector<double>> chains);

/// Autocovariance at lags 0..n-1 (biased, divisor n).
std::vector<double> autocovariance(std::span<const double> x);

}  // namespace sevsyn
