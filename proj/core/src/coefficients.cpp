#include "shelab/coefficients.hpp"

#include <algorithm>
#include <sstream>

#include "shelab/error.hpp"

namespace shelab {

CoefficientPair CoefficientPair::affine(double b0, double b1, double s0, double s1,
                                        std::string name) {
    CoefficientPair c;
    c.kind_ = Kind::affine;
    c.name_ = std::move(name);
    c.b0_ = b0;
    c.b1_ = b1;
    c.s0_ = s0;
    c.s1_ = s1;
    c.lip_b_ = std::abs(b1);
    c.lip_sigma_ = std::abs(s1);
    return c;
}

CoefficientPair CoefficientPair::additive() { return affine(0.0, 0.0, 1.0, 0.0, "additive"); }

CoefficientPair CoefficientPair::linear(double lambda) {
    return affine(0.0, lambda, 0.0, 1.0, "linear");
}

CoefficientPair CoefficientPair::smooth_bounded() {
    CoefficientPair c;
    c.kind_ = Kind::smooth_bounded;
    c.name_ = "smooth-bounded";
    c.lip_b_ = 1.0;
    c.lip_sigma_ = 0.5;
    c.max_d2b_ = 1.0;
    c.max_d2sigma_ = 0.5;
    return c;
}

CoefficientPair CoefficientPair::custom(std::string name, Fn b, Fn db, Fn d2b, Fn sigma, Fn dsigma,
                                        Fn d2sigma, double lip_b, double lip_sigma, double max_d2b,
                                        double max_d2sigma) {
    CoefficientPair c;
    c.kind_ = Kind::custom;
    c.name_ = std::move(name);
    c.b_ = std::move(b);
    c.db_ = std::move(db);
    c.d2b_ = std::move(d2b);
    c.sigma_ = std::move(sigma);
    c.dsigma_ = std::move(dsigma);
    c.d2sigma_ = std::move(d2sigma);
    c.lip_b_ = lip_b;
    c.lip_sigma_ = lip_sigma;
    c.max_d2b_ = max_d2b;
    c.max_d2sigma_ = max_d2sigma;
    return c;
}

CoefficientPair CoefficientPair::from_name(const std::string& name, double lambda) {
    if (name == "additive") return additive();
    if (name == "linear") return linear(lambda);
    if (name == "smooth-bounded" || name == "smooth_bounded") return smooth_bounded();
    throw ConfigError("unknown coefficient set '" + name +
                      "' (expected additive, linear or smooth-bounded)");
}

bool CoefficientPair::is_additive() const {
    return kind_ == Kind::affine && b0_ == 0.0 && b1_ == 0.0 && s0_ == 1.0 && s1_ == 0.0;
}

double CoefficientPair::b(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return b_(u);
        else return f.b(u);
    });
}
double CoefficientPair::db(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return db_(u);
        else return f.db(u);
    });
}
double CoefficientPair::d2b(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return d2b_(u);
        else return f.d2b(u);
    });
}
double CoefficientPair::sigma(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return sigma_(u);
        else return f.sigma(u);
    });
}
double CoefficientPair::dsigma(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return dsigma_(u);
        else return f.dsigma(u);
    });
}
double CoefficientPair::d2sigma(double u) const {
    return detail::visit_coefficients(*this, [&](auto f) {
        if constexpr (std::is_same_v<decltype(f), detail::CustomFns>) return d2sigma_(u);
        else return f.d2sigma(u);
    });
}

void CoefficientPair::spot_check(double range, int samples) const {
    constexpr double kSlack = 1e-12;
    for (int i = 0; i < samples; ++i) {
        const double u = -range + 2.0 * range * i / std::max(1, samples - 1);
        const auto check = [&](double value, double bound, const char* what) {
            if (std::abs(value) > bound + kSlack) {
                std::ostringstream os;
                os << "coefficients '" << name_ << "': |" << what << "(" << u
                   << ")| = " << std::abs(value) << " exceeds declared bound " << bound;
                throw ConfigError(os.str());
            }
        };
        check(db(u), lip_b_, "b'");
        check(dsigma(u), lip_sigma_, "sigma'");
        check(d2b(u), max_d2b_, "b''");
        check(d2sigma(u), max_d2sigma_, "sigma''");
    }
}

}  // namespace shelab
