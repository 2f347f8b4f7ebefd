#pragma once

#include <cmath>
#include <functional>
#include <string>

namespace shelab {

/// Drift b and diffusion sigma of the equation together with their first two derivatives and
/// the declared bounds L_b = |b'|_inf, L_sigma = |sigma'|_inf, M_b2 = |b''|_inf, M_sigma2.
class CoefficientPair {
public:
    enum class Kind { affine, smooth_bounded, custom };

    using Fn = std::function<double(double)>;

    /// b = 0, sigma = 1.
    static CoefficientPair additive();
    /// b(u) = lambda u, sigma(u) = u.
    static CoefficientPair linear(double lambda = 0.0);
    /// b(u) = sin u, sigma(u) = 1 + cos(u) / 2.
    static CoefficientPair smooth_bounded();
    /// b(u) = b0 + b1 u, sigma(u) = s0 + s1 u.
    static CoefficientPair affine(double b0, double b1, double s0, double s1,
                                  std::string name = "affine");
    static CoefficientPair custom(std::string name, Fn b, Fn db, Fn d2b, Fn sigma, Fn dsigma,
                                  Fn d2sigma, double lip_b, double lip_sigma, double max_d2b,
                                  double max_d2sigma);
    /// Built-in by name: "additive", "linear", "smooth-bounded". ConfigError otherwise.
    static CoefficientPair from_name(const std::string& name, double lambda = 0.0);

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    bool is_additive() const;

    double b(double u) const;
    double db(double u) const;
    double d2b(double u) const;
    double sigma(double u) const;
    double dsigma(double u) const;
    double d2sigma(double u) const;

    double lip_b() const { return lip_b_; }
    double lip_sigma() const { return lip_sigma_; }
    double max_d2b() const { return max_d2b_; }
    double max_d2sigma() const { return max_d2sigma_; }
    // Affine parameters (meaningful for Kind::affine).
    double b0() const { return b0_; }
    double b1() const { return b1_; }
    double s0() const { return s0_; }
    double s1() const { return s1_; }

    /// Samples [-range, range] and throws ConfigError if a declared bound is exceeded.
    void spot_check(double range = 10.0, int samples = 2001) const;

private:
    Kind kind_ = Kind::affine;
    std::string name_;
    double b0_ = 0, b1_ = 0, s0_ = 1, s1_ = 0;
    Fn b_, db_, d2b_, sigma_, dsigma_, d2sigma_;
    double lip_b_ = 0, lip_sigma_ = 0, max_d2b_ = 0, max_d2sigma_ = 0;
};

namespace detail {

// Inlineable evaluators used by the stepping kernels.
struct AffineFns {
    double b0, b1, s0, s1;
    double b(double u) const { return b0 + b1 * u; }
    double db(double) const { return b1; }
    double d2b(double) const { return 0.0; }
    double sigma(double u) const { return s0 + s1 * u; }
    double dsigma(double) const { return s1; }
    double d2sigma(double) const { return 0.0; }
};

struct SmoothBoundedFns {
    double b(double u) const { return std::sin(u); }
    double db(double u) const { return std::cos(u); }
    double d2b(double u) const { return -std::sin(u); }
    double sigma(double u) const { return 1.0 + 0.5 * std::cos(u); }
    double dsigma(double u) const { return -0.5 * std::sin(u); }
    double d2sigma(double u) const { return -0.5 * std::cos(u); }
};

struct CustomFns {
    const CoefficientPair* p;
    double b(double u) const { return p->b(u); }
    double db(double u) const { return p->db(u); }
    double d2b(double u) const { return p->d2b(u); }
    double sigma(double u) const { return p->sigma(u); }
    double dsigma(double u) const { return p->dsigma(u); }
    double d2sigma(double u) const { return p->d2sigma(u); }
};

template <class Visitor>
decltype(auto) visit_coefficients(const CoefficientPair& c, Visitor&& v) {
    switch (c.kind()) {
        case CoefficientPair::Kind::affine:
            return v(AffineFns{c.b0(), c.b1(), c.s0(), c.s1()});
        case CoefficientPair::Kind::smooth_bounded:
            return v(SmoothBoundedFns{});
        case CoefficientPair::Kind::custom:
            break;
    }
    return v(CustomFns{&c});
}

}  // namespace detail

}  // namespace shelab
