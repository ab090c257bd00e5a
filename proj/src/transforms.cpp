#include "sevsyn/transforms.hpp"

#include <cmath>

#include "sevsyn/special.hpp"

namespace sevsyn {

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::None: return "fixed";
    case Transform::Identity: return "identity";
    case Transform::Log: return "log";
    case Transform::Logit: return "logit";
    case Transform::StickBreaking: return "stick-breaking";
  }
  return "unknown";
}

namespace stick_breaking {

void to_simplex(std::span<const double> unconstrained, std::span<double> simplex) {
  const std::size_t k_total = simplex.size();
  double stick = 1.0;
  for (std::size_t k = 0; k + 1 < k_total; ++k) {
    const double z = inv_logit(unconstrained[k] - std::log(static_cast<double>(k_total - k - 1)));
    simplex[k] = stick * z;
    stick -= simplex[k];
  }
  simplex[k_total - 1] = stick;
}

void to_unconstrained(std::span<const double> simplex, std::span<double> unconstrained) {
  const std::size_t k_total = simplex.size();
  double used = 0.0;
  for (std::size_t k = 0; k + 1 < k_total; ++k) {
    const double z = simplex[k] / (1.0 - used);
    unconstrained[k] = logit(z) + std::log(static_cast<double>(k_total - k - 1));
    used += simplex[k];
  }
}

double log_abs_det_jacobian(std::span<const double> unconstrained) {
  const std::size_t k_total = unconstrained.size() + 1;
  double stick = 1.0;
  double out = 0.0;
  for (std::size_t k = 0; k + 1 < k_total; ++k) {
    const double shifted = unconstrained[k] - std::log(static_cast<double>(k_total - k - 1));
    const double z = inv_logit(shifted);
    // log(z (1 - z)) = -|x| - 2 log(1 + e^-|x|), stable in both tails
    out += -std::abs(shifted) - 2.0 * std::log1p(std::exp(-std::abs(shifted))) + std::log(stick);
    stick -= stick * z;
  }
  return out;
}

}  // namespace stick_breaking

}  // namespace sevsyn
