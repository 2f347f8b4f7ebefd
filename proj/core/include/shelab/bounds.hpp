#pragma once

#include <vector>

#include "shelab/check.hpp"

namespace shelab::bounds {

/// Gamma(1/4) to 20 significant digits.
inline constexpr double kGammaQuarter = 3.6256099082219083119;

/// Non-negative samples of alpha, beta and f0 on the uniform grid a = t_0 < ... < t_{m-1} = b.
struct GronwallInstance {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> f0;
};

using Iterates = std::vector<std::vector<double>>;

/// f_{k+1}(t) = alpha(t) + int_a^t beta(s) f_k(s) ds by the trapezoid rule; returns f_1..f_n.
/// Throws DomainError on negative samples, a >= b, mismatched sizes or n_iter < 1.
Iterates gronwall_iterate(const GronwallInstance& inst, int n_iter);

/// sup over iterates and grid of f_n(t) / (alpha(t) exp(int_a^t beta)), integral by trapezoid.
double gronwall_bound_ratio(const GronwallInstance& inst, const Iterates& iterates);

struct RecursionInstance {
    double r = 0.0;  // start time
    double T = 1.0;  // horizon
    double C = 1.0;  // C_t, constant per run
    double A = 1.0;  // scale
};

/// 3^{1/3} C^{1/2} exp{(3 C^3 / 2) [(t-r)^6 + Gamma(1/4)^4 / (8 pi^{5/2}) (t-r)^{3/2}]}.
/// Requires r <= t <= T.
double picard_constant(const RecursionInstance& inst, double t);

struct RecursionResult {
    double max_ratio = 0.0;          // max over grid and n of f_n(s) / (C_s A)
    bool monotone_in_n = true;       // f_{n+1} >= f_n pointwise
    std::vector<double> final_iterate;  // f_n on the grid (not the 6th power)
    std::vector<double> times;
};

/// Iterates, as an equality, F_{n+1}(s) = 9 C^3 (A^6 + K(s) int_r^s F_n) with
/// K(s) = (s-r)^5 + (4 pi)^{-3/2} B(1/4,1/4)^2 (s-r)^{1/2}, F = f^6, F_0 = 0, on a uniform grid
/// of 512 points per unit time over [r, t]. Each iterate is a finite sum of powers (s-r)^{e/2},
/// so the integrals are exact and only the evaluation on the grid rounds. Throws RangeError
/// on overflow.
RecursionResult recursion_verify(const RecursionInstance& inst, double t, int n_iter);

/// Verification battery: the 3x3x3 recursion grid and the two-resolution Gronwall check.
CheckList run_appendix_suite();

}  // namespace shelab::bounds
