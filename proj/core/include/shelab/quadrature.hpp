#pragma once

#include <functional>

namespace shelab::quad {

struct Tolerance {
    double absolute = 1e-10;
    double relative = 1e-8;
    int max_depth = 50;
};

struct Result {
    double value = 0.0;
    double error = 0.0;  // accumulated Richardson error estimate
    bool converged = true;
};

using Integrand = std::function<double(double)>;

/// Adaptive Simpson on [a, b]. Never throws; check `converged`.
Result adaptive_simpson(const Integrand& f, double a, double b, Tolerance tol = {});

/// Adaptive Simpson applied independently to `panels` equal sub-intervals of [a, b].
/// Use when the integrand has features narrower than b - a that a 5-point start could miss.
Result adaptive_simpson_panels(const Integrand& f, double a, double b, int panels,
                               Tolerance tol = {});

/// Throws NumericalError (carrying the achieved error) when `r` did not converge.
double value_or_throw(const Result& r, const char* what);

}  // namespace shelab::quad
