#include "shelab/quadrature.hpp"

#include <cmath>
#include <string>

#include "shelab/error.hpp"

namespace shelab::quad {

namespace {

struct Panel {
    double a, fa, m, fm, b, fb, whole;
};

double simpson(double a, double fa, double fm, double b, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

void recurse(const Integrand& f, const Panel& p, double abs_tol, double rel_tol, int depth,
             Result& out) {
    const double lm = 0.5 * (p.a + p.m);
    const double rm = 0.5 * (p.m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(p.a, p.fa, flm, p.m, p.fm);
    const double right = simpson(p.m, p.fm, frm, p.b, p.fb);
    const double delta = left + right - p.whole;
    const double tol = std::max(abs_tol, rel_tol * std::abs(left + right));
    if (std::abs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.error += std::abs(delta) / 15.0;
        return;
    }
    if (depth <= 0) {
        out.value += left + right + delta / 15.0;
        out.error += std::abs(delta) / 15.0;
        out.converged = false;
        return;
    }
    recurse(f, {p.a, p.fa, lm, flm, p.m, p.fm, left}, 0.5 * abs_tol, rel_tol, depth - 1, out);
    recurse(f, {p.m, p.fm, rm, frm, p.b, p.fb, right}, 0.5 * abs_tol, rel_tol, depth - 1, out);
}

}  // namespace

Result adaptive_simpson(const Integrand& f, double a, double b, Tolerance tol) {
    Result out;
    if (a == b) return out;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    recurse(f, {a, fa, m, fm, b, fb, simpson(a, fa, fm, b, fb)}, tol.absolute, tol.relative,
            tol.max_depth, out);
    return out;
}

Result adaptive_simpson_panels(const Integrand& f, double a, double b, int panels,
                               Tolerance tol) {
    if (panels < 1) panels = 1;
    Result total;
    const double h = (b - a) / panels;
    Tolerance per = tol;
    per.absolute = tol.absolute / panels;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h;
        const double hi = (i + 1 == panels) ? b : lo + h;
        const Result r = adaptive_simpson(f, lo, hi, per);
        total.value += r.value;
        total.error += r.error;
        total.converged = total.converged && r.converged;
    }
    return total;
}

double value_or_throw(const Result& r, const char* what) {
    if (!r.converged) {
        throw NumericalError(std::string(what) + ": quadrature did not converge (achieved error " +
                                 std::to_string(r.error) + ")",
                             r.error);
    }
    return r.value;
}

}  // namespace shelab::quad
