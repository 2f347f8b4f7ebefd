#pragma once

#include <cstdint>

#include "shelab/check.hpp"

namespace shelab::kernel {

struct KernelQuery {
    double t;  // > 0
    double x;
};

/// G_t(x) = (2 pi t)^{-1/2} exp(-x^2 / (2t)); throws DomainError for t <= 0.
double heat_kernel(double t, double x);
inline double heat_kernel(KernelQuery q) { return heat_kernel(q.t, q.x); }

/// log G_t(x), finite even where G_t(x) underflows.
double log_heat_kernel(double t, double x);

// Relative residuals below are computed from the logarithms of both sides so that they stay
// meaningful in the far tails where the kernels underflow: |expm1(log lhs - log rhs)|.

/// G_t^2(x) - (4 pi)^{-1/2} t^{-1/2} G_{t/2}(x).
double square_identity_residual(double t, double x);
double square_identity_relative(double t, double x);

/// G_t(x) G_s(y) - G_{t+s}(x-y) G_{ts/(t+s)}((s x + t y)/(t+s)).
double product_decomposition_residual(double t, double s, double x, double y);
double product_decomposition_relative(double t, double s, double x, double y);

/// Numeric int G_{t-s}(x-y) G_{s-r}(y-z) dy. s == r or s == t collapses to G_{t-r}(x-z).
double semigroup_convolution(double t, double s, double r, double x, double z);
/// semigroup_convolution(...) - G_{t-r}(x-z); requires r <= s <= t, r < t.
double semigroup_residual(double t, double s, double r, double x, double z);

struct ProductBoundInstance {
    double theta, r, t, T;
    double x, z, w;
};

struct BoundPair {
    double lhs;
    double rhs;
};

/// Constant 8 T^{1/2} (1 + e^{1/(exponent_denominator * T)}) of the kernel-product bound.
/// The checked form uses exponent_denominator = 16.
double product_bound_constant(double T, double exponent_denominator = 16.0);

/// lhs = G_{t-r}(x-z) G_{t-theta}(x-w),
/// rhs = C(T) (1 + (r-theta)^{-1/2}) G_{8T}(z-w) (G_{t-r}(x-z) + G_{t-theta}(x-w)).
/// Throws DomainError unless 0 < theta < r < t <= T and r - theta >= 1e-12.
BoundPair product_bound_pair(const ProductBoundInstance& inst);

/// log rhs - log lhs; non-negative iff the bound holds. Same preconditions.
double product_bound_log_margin(const ProductBoundInstance& inst,
                                double exponent_denominator = 16.0);

/// Numeric int_r^t int G^2_{t-s}(x-y) G^2_{s-r}(y-z) dy ds.
double chi_square_integral(double t, double r, double x, double z);
/// sqrt(pi/4) (t-r)^{1/2} G^2_{t-r}(x-z).
double chi_square_closed_form(double t, double r, double x, double z);
double chi_square_integral_residual(double t, double r, double x, double z);

/// Numeric int_0^1 s^{-1/2} (1-s)^{-1/2} ds (equals pi).
double beta_half_integral();

struct SingularityBounds {
    double int1;    // int_0^t |r - theta|^{-1/2} dtheta
    double int2;    // int_0^t |r - theta|^{-1/2} |s - theta|^{-1/2} dtheta
    double bound1;  // 4 t^{1/2}
    double bound2;  // 8 t^{1/2} (s - r)^{-1/2}
};

/// Requires 0 < r < s < t.
SingularityBounds singularity_integral_bounds(double r, double s, double t);

/// G_s(x) <= s^{-1/2} t^{1/2} G_t(x) for 0 < s <= t, compared to 4 ulp relative.
bool monotonicity_check(double s, double t, double x);

/// Numeric int G_t(x) dx over the truncated window (should be 1).
double kernel_mass(double t);

struct SuiteOptions {
    std::uint64_t seed = 20240611;
    int identity_instances = 10000;
    int bound_instances = 100000;
    int quadrature_instances = 100;
    double horizon = 1.0;  // T used for identity sampling
};

/// Runs every kernel identity and inequality on random inputs and returns one record per check.
CheckList run_kernel_suite(const SuiteOptions& options = {});

}  // namespace shelab::kernel
