#include "shelab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "shelab/error.hpp"

namespace shelab {

namespace {

// fftw planning is not thread safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(n));
        spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(real_);
        fftw_free(spec_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return n_; }
    double* real() { return real_; }
    std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }  // unnormalised

private:
    int n_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan forward_;
    fftw_plan backward_;
};

// sum_{m>=1} cos(m theta) / m^2 for theta in [0, 2 pi].
double clausen_cos2(double theta) {
    const double pi = std::numbers::pi;
    return pi * pi / 6.0 - pi * theta / 2.0 + theta * theta / 4.0;
}

double ou_variance(double kappa2, double t) {
    if (kappa2 == 0.0) return t;
    return -std::expm1(-kappa2 * t) / kappa2;
}

}  // namespace

double exact_additive_covariance(double half_width, double t, double h) {
    if (!(t >= 0.0)) throw DomainError("exact_additive_covariance: requires t >= 0");
    if (t == 0.0) return 0.0;
    const double P = 2.0 * half_width;
    const double two_pi = 2.0 * std::numbers::pi;
    const double theta = std::fmod(std::fmod(two_pi * h / P, two_pi) + two_pi, two_pi);
    // (2/P) sum_m (1 - e^{-kappa^2 t}) cos(kappa h) / kappa^2, kappa = 2 pi m / P.
    double decaying = 0.0;
    for (int m = 1;; ++m) {
        const double kappa = two_pi * m / P;
        const double e = std::exp(-kappa * kappa * t);
        if (e < 1e-20) break;
        decaying += e * std::cos(kappa * h) / (kappa * kappa);
    }
    const double scale = P / two_pi;
    return t / P + 2.0 / P * (scale * scale * clausen_cos2(theta) - decaying);
}

Snapshots exact_additive_sample(const GridSpec& grid, const CoefficientPair& coeffs,
                                const std::vector<double>& times, const rng::Lineage& lineage) {
    if (!coeffs.is_additive()) {
        throw MisuseError("exact_additive_sample: only defined for b = 0, sigma = 1");
    }
    if (times.empty() || times.front() <= 0.0 || !std::is_sorted(times.begin(), times.end())) {
        throw DomainError("exact_additive_sample: times must be positive and sorted");
    }
    const int n = grid.cells;
    const double P = 2.0 * grid.half_width;
    const double two_pi = 2.0 * std::numbers::pi;

    double tau = times.front();
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (times[i] > times[i - 1]) tau = std::min(tau, times[i] - times[i - 1]);
    }
    // Explicit modes: kappa^2 tau < 80.
    const int explicit_modes = static_cast<int>(std::floor(std::sqrt(80.0 / tau) * P / two_pi));

    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) xs[static_cast<std::size_t>(j)] = grid.x(j);

    // Tail covariance on the grid: (2/P) sum_{m > M} cos(kappa_m l dx) / kappa_m^2.
    const double scale = P / two_pi;
    std::vector<double> tail_cov(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
        const double theta = two_pi * l / n;
        double head = 0.0;
        for (int m = 1; m <= explicit_modes; ++m) head += std::cos(m * theta) / (double(m) * m);
        tail_cov[static_cast<std::size_t>(l)] = 2.0 / P * scale * scale * (clausen_cos2(theta) - head);
    }
    RealFft fft(n);
    std::copy(tail_cov.begin(), tail_cov.end(), fft.real());
    fft.forward();
    std::vector<double> tail_eig(static_cast<std::size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) tail_eig[static_cast<std::size_t>(k)] = std::max(0.0, fft.spectrum()[k].real());

    const int n_explicit = explicit_modes + 1;  // including m = 0
    std::vector<double> cos_coef(static_cast<std::size_t>(n_explicit), 0.0);
    std::vector<double> sin_coef(static_cast<std::size_t>(n_explicit), 0.0);
    std::vector<double> draws(static_cast<std::size_t>(2 * n_explicit));
    std::vector<double> tail_draws(static_cast<std::size_t>(n + 2));

    Snapshots out;
    double previous = 0.0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        const double gap = t - previous;
        rng::fill_normals(lineage, ti, 0u, draws);
        for (int m = 0; m < n_explicit; ++m) {
            const double kappa = two_pi * m / P;
            const double k2 = kappa * kappa;
            const double decay = std::exp(-0.5 * k2 * gap);
            const double sd = std::sqrt(ou_variance(k2, gap));
            const auto mi = static_cast<std::size_t>(m);
            cos_coef[mi] = decay * cos_coef[mi] + sd * draws[2 * mi];
            sin_coef[mi] = decay * sin_coef[mi] + sd * draws[2 * mi + 1];
        }
        previous = t;

        // Explicit modes and the tail share one c2r transform when the modes fit below Nyquist.
        rng::fill_normals(lineage, ti, 1u, tail_draws);
        auto* spec = fft.spectrum();
        for (int k = 0; k <= n / 2; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double amp = std::sqrt(tail_eig[kk] / n);
            if (k == 0 || k == n / 2) {
                spec[k] = {amp * tail_draws[2 * kk], 0.0};
            } else {
                const double w = std::sqrt(0.5) * amp;
                spec[k] = {w * tail_draws[2 * kk], -w * tail_draws[2 * kk + 1]};
            }
        }
        const double base = std::sqrt(2.0 / P);
        const bool via_fft = explicit_modes < n / 2;
        if (via_fft) {
            spec[0] += cos_coef[0] / std::sqrt(P);
            for (int m = 1; m < n_explicit; ++m) {
                const auto mi = static_cast<std::size_t>(m);
                const double phase = two_pi * m * xs[0] / P;
                spec[m] += 0.5 * base * std::complex<double>(cos_coef[mi], -sin_coef[mi]) *
                           std::polar(1.0, phase);
            }
        }
        fft.backward();

        FieldSnapshot snap{t, std::vector<double>(fft.real(), fft.real() + n)};
        for (auto& v : snap.values) v += 1.0;
        if (!via_fft) {
            for (int j = 0; j < n; ++j) {
                const double x = xs[static_cast<std::size_t>(j)];
                double v = cos_coef[0] / std::sqrt(P);
                for (int m = 1; m < n_explicit; ++m) {
                    const double arg = two_pi * m * x / P;
                    v += base * (cos_coef[static_cast<std::size_t>(m)] * std::cos(arg) +
                                 sin_coef[static_cast<std::size_t>(m)] * std::sin(arg));
                }
                snap.values[static_cast<std::size_t>(j)] += v;
            }
        }
        out.push_back(std::move(snap));
    }
    return out;
}

PicardResult picard_solve(const GridSpec& grid, const CoefficientPair& coeffs,
                          const NoiseSlab& noise, int n_iter) {
    grid.validate();
    if (n_iter < 1) throw DomainError("picard_solve: n_iter must be >= 1");
    if (noise.cells() != grid.cells || noise.steps() != grid.steps) {
        throw ConfigError("picard_solve: noise slab does not match the grid");
    }
    const int n = grid.cells;
    const auto nn = static_cast<std::size_t>(n);
    const int levels = grid.steps + 1;
    const double dt = grid.dt();
    const double noise_scale = std::sqrt(dt / grid.dx());
    const double P = 2.0 * grid.half_width;

    std::vector<double> damping(nn / 2 + 1);
    for (std::size_t k = 0; k <= nn / 2; ++k) {
        const double kappa = 2.0 * std::numbers::pi * static_cast<double>(k) / P;
        damping[k] = std::exp(-0.5 * kappa * kappa * dt) / n;  // includes 1/n of the c2r
    }

    RealFft fft(n);
    std::vector<double> current(static_cast<std::size_t>(levels) * nn, 1.0);
    std::vector<double> next(current.size());
    PicardResult res;

    for (int it = 0; it < n_iter; ++it) {
        std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(nn), 1.0);
        for (int k = 0; k < grid.steps; ++k) {
            const double* prev_iter = current.data() + static_cast<std::size_t>(k) * nn;
            const double* level = next.data() + static_cast<std::size_t>(k) * nn;
            const auto xi = noise.step(k);
            double* buf = fft.real();
            for (std::size_t i = 0; i < nn; ++i) {
                buf[i] = level[i] + coeffs.b(prev_iter[i]) * dt +
                         coeffs.sigma(prev_iter[i]) * xi[i] * noise_scale;
            }
            fft.forward();
            auto* spec = fft.spectrum();
            for (std::size_t q = 0; q <= nn / 2; ++q) spec[q] *= damping[q];
            fft.backward();
            double* dst = next.data() + static_cast<std::size_t>(k + 1) * nn;
            std::copy(buf, buf + n, dst);
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            if (!std::isfinite(next[i])) {
                throw SimulationDiverged("picard_solve: non-finite iterate", it + 1);
            }
            delta = std::max(delta, std::abs(next[i] - current[i]));
        }
        res.deltas.push_back(delta);
        current.swap(next);
    }

    const std::size_t m = res.deltas.size();
    if (m >= 2 && res.deltas[m - 1] >= res.deltas[m - 2] && res.deltas[m - 1] > 1e-12) {
        res.converged = false;
        res.warning = "picard_solve: deltas stopped decreasing after " + std::to_string(m) +
                      " iterations (last " + std::to_string(res.deltas[m - 1]) + ")";
    }
    const auto cps = grid.checkpoint_steps();
    for (std::size_t c = 0; c < cps.size(); ++c) {
        const auto begin = current.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(cps[c]) * nn);
        res.snapshots.push_back({grid.checkpoints[c], std::vector<double>(begin, begin + n)});
    }
    res.path = std::move(current);
    return res;
}

}  // namespace shelab
