#include "shelab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "shelab/error.hpp"
#include "shelab/quadrature.hpp"

namespace shelab::kernel {

namespace {

constexpr long double kPiL = std::numbers::pi_v<long double>;

void require_positive_time(double t, const char* what) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        std::ostringstream os;
        os << what << ": time must be positive and finite (got " << t << ")";
        throw DomainError(os.str());
    }
}

long double log_g(long double t, long double x) {
    return -0.5L * std::log(2.0L * kPiL * t) - x * x / (2.0L * t);
}

long double relative_from_logs(long double log_lhs, long double log_rhs) {
    return std::abs(std::expm1(log_lhs - log_rhs));
}

// Window around the peak of y -> G_a(p - y) G_b(y - q) (a product of Gaussians in y).
// The integrand is evaluated at the offset d = y - center, with p - center and center - q
// formed from p - q directly, so narrow windows far from the origin keep full precision.
struct Window {
    double to_p;  // p - center
    double to_q;  // center - q
    double sd;
};

Window product_window(double a, double p, double b, double q) {
    const double gap = p - q;
    return {gap * a / (a + b), gap * b / (a + b), std::sqrt(a * b / (a + b))};
}

// f(p - y, y - q) integrated over y.
template <class F>
double integrate_product(F f, Window win, const char* what) {
    constexpr double kHalfWidth = 10.0;
    constexpr int kPanels = 16;
    const auto g = [&](double d) { return f(win.to_p - d, win.to_q + d); };
    const double peak = std::abs(g(0.0));
    quad::Tolerance tol;
    tol.relative = 1e-11;
    tol.absolute = std::max(1e-14 * peak * win.sd, std::numeric_limits<double>::min());
    const auto r = quad::adaptive_simpson_panels(g, -kHalfWidth * win.sd, kHalfWidth * win.sd,
                                                 kPanels, tol);
    return quad::value_or_throw(r, what);
}

}  // namespace

double heat_kernel(double t, double x) {
    require_positive_time(t, "heat_kernel");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

double log_heat_kernel(double t, double x) {
    require_positive_time(t, "log_heat_kernel");
    return -0.5 * std::log(2.0 * std::numbers::pi * t) - x * x / (2.0 * t);
}

double square_identity_residual(double t, double x) {
    require_positive_time(t, "square_identity_residual");
    const double g = heat_kernel(t, x);
    return g * g - heat_kernel(0.5 * t, x) / std::sqrt(4.0 * std::numbers::pi * t);
}

double square_identity_relative(double t, double x) {
    require_positive_time(t, "square_identity_relative");
    const long double tl = t, xl = x;
    const long double lhs = 2.0L * log_g(tl, xl);
    const long double rhs = -0.5L * std::log(4.0L * kPiL * tl) + log_g(0.5L * tl, xl);
    return static_cast<double>(relative_from_logs(lhs, rhs));
}

double product_decomposition_residual(double t, double s, double x, double y) {
    require_positive_time(t, "product_decomposition_residual");
    require_positive_time(s, "product_decomposition_residual");
    const double lhs = heat_kernel(t, x) * heat_kernel(s, y);
    const double rhs =
        heat_kernel(t + s, x - y) * heat_kernel(t * s / (t + s), (s * x + t * y) / (t + s));
    return lhs - rhs;
}

double product_decomposition_relative(double t, double s, double x, double y) {
    require_positive_time(t, "product_decomposition_relative");
    require_positive_time(s, "product_decomposition_relative");
    const long double tl = t, sl = s, xl = x, yl = y;
    const long double lhs = log_g(tl, xl) + log_g(sl, yl);
    const long double rhs =
        log_g(tl + sl, xl - yl) + log_g(tl * sl / (tl + sl), (sl * xl + tl * yl) / (tl + sl));
    return static_cast<double>(relative_from_logs(lhs, rhs));
}

double semigroup_convolution(double t, double s, double r, double x, double z) {
    if (!(r < t) || s < r || s > t) {
        throw DomainError("semigroup_convolution: requires r <= s <= t with r < t");
    }
    if (s == r || s == t) return heat_kernel(t - r, x - z);
    const double a = t - s;
    const double b = s - r;
    const auto f = [=](double u, double v) { return heat_kernel(a, u) * heat_kernel(b, v); };
    return integrate_product(f, product_window(a, x, b, z), "semigroup_convolution");
}

double semigroup_residual(double t, double s, double r, double x, double z) {
    return semigroup_convolution(t, s, r, x, z) - heat_kernel(t - r, x - z);
}

double product_bound_constant(double T, double exponent_denominator) {
    require_positive_time(T, "product_bound_constant");
    return 8.0 * std::sqrt(T) * (1.0 + std::exp(1.0 / (exponent_denominator * T)));
}

namespace {

void require_bound_ordering(const ProductBoundInstance& in) {
    constexpr double kMinGap = 1e-12;
    if (!(in.theta > 0.0 && in.theta < in.r && in.r < in.t && in.t <= in.T)) {
        throw DomainError("product bound: requires 0 < theta < r < t <= T");
    }
    if (in.r - in.theta < kMinGap) {
        throw DomainError("product bound: r - theta below 1e-12 is treated as an ordering violation");
    }
}

}  // namespace

BoundPair product_bound_pair(const ProductBoundInstance& in) {
    require_bound_ordering(in);
    const double g1 = heat_kernel(in.t - in.r, in.x - in.z);
    const double g2 = heat_kernel(in.t - in.theta, in.x - in.w);
    const double rhs = product_bound_constant(in.T) * (1.0 + 1.0 / std::sqrt(in.r - in.theta)) *
                       heat_kernel(8.0 * in.T, in.z - in.w) * (g1 + g2);
    return {g1 * g2, rhs};
}

double product_bound_log_margin(const ProductBoundInstance& in, double exponent_denominator) {
    require_bound_ordering(in);
    const long double l1 = log_g(in.t - in.r, static_cast<long double>(in.x) - in.z);
    const long double l2 = log_g(in.t - in.theta, static_cast<long double>(in.x) - in.w);
    const long double hi = std::max(l1, l2);
    const long double log_sum = hi + std::log1p(std::exp(std::min(l1, l2) - hi));
    const long double TL = in.T;
    const long double log_const = std::log(8.0L) + 0.5L * std::log(TL) +
                                  std::log1p(std::exp(1.0L / (exponent_denominator * TL)));
    const long double log_rhs = log_const +
                                std::log1p(1.0L / std::sqrt(static_cast<long double>(in.r) - in.theta)) +
                                log_g(8.0L * TL, static_cast<long double>(in.z) - in.w) + log_sum;
    return static_cast<double>(log_rhs - (l1 + l2));
}

double chi_square_integral(double t, double r, double x, double z) {
    if (!(r < t)) throw DomainError("chi_square_integral: requires r < t");
    const double span = t - r;
    // Inner dy integral of the product of two squared kernels, for s strictly inside (r, t).
    const auto inner = [=](double a, double b) {
        const auto f = [=](double u, double v) {
            const double g1 = heat_kernel(a, u);
            const double g2 = heat_kernel(b, v);
            return g1 * g1 * g2 * g2;
        };
        // Squared kernels are Gaussians with variances a/2 and b/2.
        return integrate_product(f, product_window(0.5 * a, x, 0.5 * b, z), "chi_square_integral");
    };
    // s = r + span sin^2(phi) removes the (t-s)^{-1/2}(s-r)^{-1/2} endpoint behaviour.
    constexpr double kEdge = 1e-8;
    const double half_pi = 0.5 * std::numbers::pi;
    const auto outer = [=](double phi) {
        phi = std::clamp(phi, kEdge, half_pi - kEdge);
        const double sn = std::sin(phi), cs = std::cos(phi);
        return 2.0 * span * sn * cs * inner(span * cs * cs, span * sn * sn);
    };
    quad::Tolerance tol;
    tol.relative = 1e-10;
    tol.absolute = std::max(1e-13 * std::abs(outer(0.25 * std::numbers::pi)),
                            std::numeric_limits<double>::min());
    const auto res = quad::adaptive_simpson(outer, 0.0, half_pi, tol);
    return quad::value_or_throw(res, "chi_square_integral");
}

double chi_square_closed_form(double t, double r, double x, double z) {
    if (!(r < t)) throw DomainError("chi_square_closed_form: requires r < t");
    const double g = heat_kernel(t - r, x - z);
    return std::sqrt(std::numbers::pi / 4.0) * std::sqrt(t - r) * g * g;
}

double chi_square_integral_residual(double t, double r, double x, double z) {
    return chi_square_integral(t, r, x, z) - chi_square_closed_form(t, r, x, z);
}

double beta_half_integral() {
    // Symmetric about 1/2; on [0, 1/2] the substitution s = v^2 leaves 2 (1 - v^2)^{-1/2} dv.
    const auto f = [](double v) { return 2.0 / std::sqrt(1.0 - v * v); };
    quad::Tolerance tol;
    tol.relative = 1e-13;
    tol.absolute = 1e-14;
    return 2.0 * quad::value_or_throw(quad::adaptive_simpson(f, 0.0, std::sqrt(0.5), tol),
                                      "beta_half_integral");
}

SingularityBounds singularity_integral_bounds(double r, double s, double t) {
    if (!(0.0 < r && r < s && s < t)) {
        throw DomainError("singularity_integral_bounds: requires 0 < r < s < t");
    }
    quad::Tolerance tol;
    tol.relative = 1e-12;
    tol.absolute = 1e-14;
    const double gap = s - r;

    // int1: theta = r -/+ u^2 on either side of the singularity; the integrand becomes 2.
    const auto flat = [](double) { return 2.0; };
    const double int1 =
        quad::value_or_throw(quad::adaptive_simpson(flat, 0.0, std::sqrt(r), tol), "int1") +
        quad::value_or_throw(quad::adaptive_simpson(flat, 0.0, std::sqrt(t - r), tol), "int1");

    // int2 on [0,r]: theta = r - u^2 -> 2 / sqrt(gap + u^2); on [s,t]: theta = s + u^2 likewise;
    // on [r,s]: theta = r + gap sin^2(phi) -> 2 dphi.
    const auto outer_piece = [gap](double u) { return 2.0 / std::sqrt(gap + u * u); };
    const auto middle = [](double) { return 2.0; };
    const double int2 =
        quad::value_or_throw(quad::adaptive_simpson(outer_piece, 0.0, std::sqrt(r), tol), "int2") +
        quad::value_or_throw(quad::adaptive_simpson(middle, 0.0, 0.5 * std::numbers::pi, tol), "int2") +
        quad::value_or_throw(quad::adaptive_simpson(outer_piece, 0.0, std::sqrt(t - s), tol), "int2");

    return {int1, int2, 4.0 * std::sqrt(t), 8.0 * std::sqrt(t) / std::sqrt(gap)};
}

bool monotonicity_check(double s, double t, double x) {
    require_positive_time(s, "monotonicity_check");
    if (s > t) throw DomainError("monotonicity_check: requires s <= t");
    const long double lhs = log_g(s, x);
    const long double rhs = -0.5L * std::log(static_cast<long double>(s)) +
                            0.5L * std::log(static_cast<long double>(t)) + log_g(t, x);
    return lhs <= rhs + 4.0L * std::numeric_limits<double>::epsilon();
}

double kernel_mass(double t) {
    require_positive_time(t, "kernel_mass");
    const double sd = std::sqrt(t);
    quad::Tolerance tol;
    tol.relative = 1e-12;
    tol.absolute = 1e-14;
    const auto f = [t](double x) { return heat_kernel(t, x); };
    return quad::value_or_throw(quad::adaptive_simpson_panels(f, -10.0 * sd, 10.0 * sd, 8, tol),
                                "kernel_mass");
}

namespace {

struct Sampler {
    std::mt19937_64 rng;
    double log_uniform(double lo, double hi) {
        std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
        return std::exp(u(rng));
    }
    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        return u(rng);
    }
};

CheckRecord max_check(const std::string& name, double worst, double threshold, int n) {
    CheckRecord c;
    c.name = name;
    c.value = worst;
    c.threshold = threshold;
    c.passed = worst <= threshold;
    c.detail = std::to_string(n) + " instances";
    return c;
}

}  // namespace

CheckList run_kernel_suite(const SuiteOptions& opt) {
    CheckList out;
    Sampler smp{std::mt19937_64(opt.seed)};
    const double T = opt.horizon;
    const double xmax = 6.0 * std::sqrt(T);
    constexpr double kTmin = 1e-3;

    double worst_sq = 0.0, worst_prod = 0.0, worst_sym = 0.0;
    for (int i = 0; i < opt.identity_instances; ++i) {
        const double t = smp.log_uniform(kTmin, T);
        const double s = smp.log_uniform(kTmin, T);
        const double x = smp.uniform(-xmax, xmax);
        const double y = smp.uniform(-xmax, xmax);
        worst_sq = std::max(worst_sq, square_identity_relative(t, x));
        worst_prod = std::max(worst_prod, product_decomposition_relative(t, s, x, y));
        worst_sym = std::max(worst_sym, std::abs(heat_kernel(t, x) - heat_kernel(t, -x)));
    }
    out.push_back(max_check("square_identity_max_relative", worst_sq, 1e-12, opt.identity_instances));
    out.push_back(max_check("product_decomposition_max_relative", worst_prod, 1e-12,
                            opt.identity_instances));
    out.push_back(max_check("kernel_symmetry_max_abs", worst_sym, 0.0, opt.identity_instances));

    // Quadrature-based identities. Instances whose target underflows (exponent > 200) are
    // redrawn: a relative residual is meaningless there.
    double worst_semi = 0.0, worst_chi = 0.0, worst_mass = 0.0;
    for (int i = 0; i < opt.quadrature_instances; ++i) {
        double r, s, t, x, z;
        do {
            double a = smp.log_uniform(kTmin, T), b = smp.log_uniform(kTmin, T),
                   c = smp.log_uniform(kTmin, T);
            if (a > b) std::swap(a, b);
            if (b > c) std::swap(b, c);
            if (a > b) std::swap(a, b);
            r = a, s = b, t = c;
            x = smp.uniform(-xmax, xmax);
            z = smp.uniform(-xmax, xmax);
        } while (!(r < s && s < t) || (x - z) * (x - z) / (t - r) > 200.0);
        const double target = heat_kernel(t - r, x - z);
        worst_semi = std::max(worst_semi, std::abs(semigroup_residual(t, s, r, x, z)) / target);
        const double chi = chi_square_closed_form(t, r, x, z);
        worst_chi = std::max(worst_chi, std::abs(chi_square_integral(t, r, x, z) - chi) / chi);
        worst_mass = std::max(worst_mass, std::abs(kernel_mass(t) - 1.0));
    }
    out.push_back(max_check("semigroup_max_relative", worst_semi, 1e-6, opt.quadrature_instances));
    out.push_back(max_check("chi_square_integral_max_relative", worst_chi, 1e-6,
                            opt.quadrature_instances));
    out.push_back(max_check("kernel_mass_max_abs", worst_mass, 1e-8, opt.quadrature_instances));
    out.push_back(max_check("beta_half_abs", std::abs(beta_half_integral() - std::numbers::pi),
                            1e-10, 1));

    // Kernel-product bound over random admissible instances.
    int violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    double min_margin_8T = std::numeric_limits<double>::infinity();
    for (int i = 0; i < opt.bound_instances; ++i) {
        ProductBoundInstance in{};
        do {
            in.T = smp.log_uniform(0.1, 10.0);
            double a = smp.log_uniform(kTmin, in.T), b = smp.log_uniform(kTmin, in.T),
                   c = smp.log_uniform(kTmin, in.T);
            if (a > b) std::swap(a, b);
            if (b > c) std::swap(b, c);
            if (a > b) std::swap(a, b);
            in.theta = a, in.r = b, in.t = c;
        } while (!(in.theta < in.r && in.r < in.t) || in.r - in.theta < 1e-12);
        const double half = 6.0 * std::sqrt(in.T);
        in.x = smp.uniform(-half, half);
        in.z = smp.uniform(-half, half);
        in.w = smp.uniform(-half, half);
        const double margin = product_bound_log_margin(in);
        if (margin < 0.0) ++violations;
        min_margin = std::min(min_margin, margin);
        min_margin_8T = std::min(min_margin_8T, product_bound_log_margin(in, 8.0));
    }
    CheckRecord bound;
    bound.name = "kernel_product_bound_violations";
    bound.value = violations;
    bound.threshold = 0.0;
    bound.passed = violations == 0;
    bound.detail = std::to_string(opt.bound_instances) + " instances, min log margin " +
                   std::to_string(min_margin) + " (1/(8T) variant: " +
                   std::to_string(min_margin_8T) + ")";
    out.push_back(bound);

    int mono_fail = 0;
    double worst_sing = 0.0;
    for (int i = 0; i < opt.identity_instances; ++i) {
        double s = smp.log_uniform(kTmin, T), t = smp.log_uniform(kTmin, T);
        if (s > t) std::swap(s, t);
        if (!monotonicity_check(s, t, smp.uniform(-xmax, xmax))) ++mono_fail;
    }
    for (int i = 0; i < opt.quadrature_instances; ++i) {
        double a = smp.log_uniform(kTmin, T), b = smp.log_uniform(kTmin, T),
               c = smp.log_uniform(kTmin, T);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        if (!(a < b && b < c)) continue;
        const auto sb = singularity_integral_bounds(a, b, c);
        worst_sing = std::max({worst_sing, sb.int1 / sb.bound1, sb.int2 / sb.bound2});
    }
    out.push_back(max_check("monotonicity_failures", mono_fail, 0.0, opt.identity_instances));
    out.push_back(max_check("singularity_integral_max_ratio", worst_sing, 1.0,
                            opt.quadrature_instances));
    return out;
}

}  // namespace shelab::kernel
