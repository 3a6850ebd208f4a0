#pragma once

#include "shiftlab/drift.hpp"
#include "shiftlab/grid.hpp"
#include "shiftlab/numeric.hpp"

namespace shiftlab {

// log of the change-of-measure weight that removes the drift:
// -sum_i u'_i dw_i - 1/2 sum_i u'_i^2 dt.
double log_rho_minus(const DensityPath& u_dot, const WienerPath& path);
double log_rho_minus(const AdaptedDrift& drift, const WienerPath& path);

// Opposite-sign weight; satisfies
// log_rho_minus + log_rho_plus = -cm_norm_sq(u_dot) up to rounding.
double log_rho_plus(const DensityPath& u_dot, const WienerPath& path);
double log_rho_plus(const AdaptedDrift& drift, const WienerPath& path);

// Monte Carlo mean of exp(log_rho_minus) with a 99% CLT half-width. The mean
// should sit within half_width of 1 when the weight is a true martingale;
// callers compare |mean - 1| against half_width. Weights are aggregated in
// log space with max subtraction.
Estimate novikov_check(const AdaptedDrift& drift, const SampleBatch& batch, unsigned threads = 1);

// log rho(-v)(U(w)) + log rho(-u)(w): zero exactly when (u, v) invert each
// other on the grid. The two-argument form realizes v by solving the inverse
// equation along U(w).
double density_identity_residual(const AdaptedDrift& u, const AdaptedDrift& v, const WienerPath& path);
double density_identity_residual(const AdaptedDrift& u, const WienerPath& path);

} // namespace shiftlab
