#include "shelab/solver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "shelab/error.hpp"

namespace shelab {

NoiseSlab::NoiseSlab(int cells, int steps, rng::Lineage lineage)
    : cells_(cells),
      steps_(steps),
      lineage_(lineage),
      data_(static_cast<std::size_t>(cells) * static_cast<std::size_t>(steps), 0.0) {}

NoiseSlab NoiseSlab::generate(const GridSpec& grid, const rng::Lineage& lineage) {
    NoiseSlab slab(grid.cells, grid.steps, lineage);
    for (int k = 0; k < grid.steps; ++k) rng::fill_normals(lineage, static_cast<std::uint64_t>(k), slab.step(k));
    return slab;
}

NoiseSlab NoiseSlab::coarsen(int space_factor, int time_factor) const {
    if (space_factor < 1 || time_factor < 1 || cells_ % space_factor != 0 ||
        steps_ % time_factor != 0) {
        throw DomainError("NoiseSlab::coarsen: factors must divide the slab dimensions");
    }
    NoiseSlab out(cells_ / space_factor, steps_ / time_factor, lineage_);
    const double norm = 1.0 / std::sqrt(static_cast<double>(space_factor * time_factor));
    for (int k = 0; k < out.steps_; ++k) {
        auto row = out.step(k);
        for (int q = 0; q < time_factor; ++q) {
            const auto fine = step(k * time_factor + q);
            for (int i = 0; i < out.cells_; ++i) {
                for (int p = 0; p < space_factor; ++p) row[i] += fine[i * space_factor + p];
            }
        }
        for (double& v : row) v *= norm;
    }
    return out;
}

namespace {

// One explicit step; returns a sum of the new state for the finiteness check.
template <class Fns>
double euler_step(std::span<const double> u, std::span<double> next, std::span<const double> xi,
                  double half_cfl, double dt, double noise_scale, const Fns& f) {
    const std::size_t n = u.size();
    const auto update = [&](std::size_t i, double left, double right) {
        const double ui = u[i];
        return ui + half_cfl * (left - 2.0 * ui + right) + f.b(ui) * dt +
               f.sigma(ui) * xi[i] * noise_scale;
    };
    next[0] = update(0, u[n - 1], u[1]);
    for (std::size_t i = 1; i + 1 < n; ++i) next[i] = update(i, u[i - 1], u[i + 1]);
    next[n - 1] = update(n - 1, u[n - 2], u[0]);

    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += next[i];
        s1 += next[i + 1];
        s2 += next[i + 2];
        s3 += next[i + 3];
    }
    for (; i < n; ++i) s0 += next[i];
    return (s0 + s1) + (s2 + s3);
}

// Drives the scheme; `noise(k, out)` fills the draws for step k, `on_step(k+1, state)` sees
// every new level.
template <class NoiseFn, class StepFn>
void run_scheme(const GridSpec& grid, const CoefficientPair& coeffs, NoiseFn&& noise,
                const CheckpointObserver& observer, StepFn&& on_step) {
    grid.validate();
    const auto cps = grid.checkpoint_steps();
    const std::size_t n = static_cast<std::size_t>(grid.cells);
    std::vector<double> u(n, 1.0), next(n), xi(n);
    const double half_cfl = 0.5 * grid.cfl();
    const double dt = grid.dt();
    const double noise_scale = std::sqrt(dt / grid.dx());
    on_step(0, std::span<const double>(u));
    std::size_t ci = 0;
    detail::visit_coefficients(coeffs, [&](const auto& fns) {
        for (int k = 0; k < grid.steps; ++k) {
            noise(k, std::span<double>(xi));
            const double sum = euler_step<std::decay_t<decltype(fns)>>(u, next, xi, half_cfl, dt,
                                                                        noise_scale, fns);
            if (!std::isfinite(sum)) {
                std::ostringstream os;
                os << "simulation diverged at step " << k + 1 << " (t = " << (k + 1) * dt << ")";
                throw SimulationDiverged(os.str(), k + 1);
            }
            u.swap(next);
            on_step(k + 1, std::span<const double>(u));
            while (ci < cps.size() && cps[ci] == k + 1) {
                if (observer) observer(ci, grid.checkpoints[ci], u);
                ++ci;
            }
        }
    });
}

CheckpointObserver collect_into(Snapshots& out) {
    return [&out](std::size_t, double t, std::span<const double> v) {
        out.push_back({t, std::vector<double>(v.begin(), v.end())});
    };
}

void check_slab(const GridSpec& grid, const NoiseSlab& noise) {
    if (noise.cells() != grid.cells || noise.steps() != grid.steps) {
        throw ConfigError("noise slab dimensions do not match the grid");
    }
}

}  // namespace

void simulate(const GridSpec& grid, const CoefficientPair& coeffs, const rng::Lineage& lineage,
              const CheckpointObserver& observer) {
    run_scheme(
        grid, coeffs,
        [&](int k, std::span<double> xi) { rng::fill_normals(lineage, static_cast<std::uint64_t>(k), xi); },
        observer, [](int, std::span<const double>) {});
}

Snapshots simulate(const GridSpec& grid, const CoefficientPair& coeffs,
                   const rng::Lineage& lineage) {
    Snapshots out;
    simulate(grid, coeffs, lineage, collect_into(out));
    return out;
}

Snapshots simulate(const GridSpec& grid, const CoefficientPair& coeffs, const NoiseSlab& noise) {
    check_slab(grid, noise);
    Snapshots out;
    run_scheme(
        grid, coeffs,
        [&](int k, std::span<double> xi) {
            const auto row = noise.step(k);
            std::copy(row.begin(), row.end(), xi.begin());
        },
        collect_into(out), [](int, std::span<const double>) {});
    return out;
}

BaseRun::BaseRun(GridSpec grid, CoefficientPair coeffs, NoiseSlab noise, std::vector<double> path)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)), noise_(std::move(noise)), path_(std::move(path)) {}

Snapshots BaseRun::snapshots() const {
    Snapshots out;
    const auto cps = grid_.checkpoint_steps();
    for (std::size_t c = 0; c < cps.size(); ++c) {
        const auto s = state(cps[c]);
        out.push_back({grid_.checkpoints[c], std::vector<double>(s.begin(), s.end())});
    }
    return out;
}

BaseRun simulate_path(const GridSpec& grid, const CoefficientPair& coeffs, NoiseSlab noise) {
    check_slab(grid, noise);
    const std::size_t n = static_cast<std::size_t>(grid.cells);
    std::vector<double> path((static_cast<std::size_t>(grid.steps) + 1) * n);
    run_scheme(
        grid, coeffs,
        [&](int k, std::span<double> xi) {
            const auto row = noise.step(k);
            std::copy(row.begin(), row.end(), xi.begin());
        },
        CheckpointObserver{},
        [&](int k, std::span<const double> u) {
            std::copy(u.begin(), u.end(), path.begin() + static_cast<std::ptrdiff_t>(k * n));
        });
    return BaseRun(grid, coeffs, std::move(noise), std::move(path));
}

BaseRun simulate_path(const GridSpec& grid, const CoefficientPair& coeffs,
                      const rng::Lineage& lineage) {
    grid.validate();
    return simulate_path(grid, coeffs, NoiseSlab::generate(grid, lineage));
}

double lattice_additive_covariance(const GridSpec& grid, double t, int lag) {
    const int levels = grid.time_index(t);
    const int n = grid.cells;
    const double lam = grid.cfl();
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / n;
        const double m = 1.0 - lam * (1.0 - std::cos(theta));
        const double m2 = m * m;
        const double geometric =
            std::abs(1.0 - m2) < 1e-15 ? static_cast<double>(levels)
                                        : (1.0 - std::pow(m2, levels)) / (1.0 - m2);
        sum += geometric * std::cos(theta * lag);
    }
    return grid.dt() / grid.dx() * sum / n;
}

}  // namespace shelab
