#pragma once

#include <string>
#include <vector>

#include "shelab/solver.hpp"

namespace shelab {

/// Covariance Cov(u(t,x), u(t,x+h)) of the additive-noise solution on the periodic line of
/// circumference 2L (continuum in space, exact in time).
double exact_additive_covariance(double half_width, double t, double h);

/// Samples the exactly Gaussian additive-noise solution u = 1 + stochastic convolution at the
/// grid's cell centres, jointly over `times` (sorted, positive), by spectral synthesis.
/// Low modes are propagated as exact Ornstein-Uhlenbeck coefficients between times; modes
/// that decorrelate within e^{-40} over the smallest time gap are drawn independently per time
/// from their closed-form aliased covariance. Throws MisuseError for non-additive coefficients.
Snapshots exact_additive_sample(const GridSpec& grid, const CoefficientPair& coeffs,
                                const std::vector<double>& times, const rng::Lineage& lineage);

struct PicardResult {
    Snapshots snapshots;          // final iterate at the grid checkpoints
    std::vector<double> deltas;   // sup-norm change per iteration, over the whole path
    std::vector<double> path;     // final iterate, (steps+1) x cells
    bool converged = true;
    std::string warning;
};

/// Picard iteration of the discretized mild equation driven by `noise`:
///   u_{n+1}(t_{k+1}) = S(dt) [u_{n+1}(t_k) + b(u_n(t_k)) dt + sigma(u_n(t_k)) xi^k sqrt(dt/dx)],
/// u_{n+1}(0) = 1, u_0 = 1, with S the exact heat semigroup on the periodic grid (applied to the
/// trigonometric interpolant via FFT). Non-decreasing final deltas set converged = false and a
/// warning; they are not an error.
PicardResult picard_solve(const GridSpec& grid, const CoefficientPair& coeffs,
                          const NoiseSlab& noise, int n_iter);

}  // namespace shelab
