#pragma once

#include <span>
#include <string_view>

namespace sevsyn {

/// Map from a constrained support to the unconstrained space the sampler
/// moves in.
enum class Transform {
  None,           // fixed value, no unconstrained coordinates
  Identity,       // real line
  Log,            // positive reals
  Logit,          // (lower, upper) interval, unit interval by default
  StickBreaking,  // K-simplex <-> R^(K-1)
};

std::string_view to_string(Transform t);

/// Stick-breaking simplex transform with the centring offset log(K - k - 1),
/// so that the zero vector maps to the simplex barycentre.
namespace stick_breaking {

/// `unconstrained` has K-1 entries, `simplex` has K.
void to_simplex(std::span<const double> unconstrained, std::span<double> simplex);
void to_unconstrained(std::span<const double> simplex, std::span<double> unconstrained);
/// log |det J| of the map unconstrained -> first K-1 simplex coordinates.
double log_abs_det_jacobian(std::span<const double> unconstrained);

}  // namespace stick_breaking

}  // namespace sevsyn
