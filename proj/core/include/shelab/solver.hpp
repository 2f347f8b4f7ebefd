#pragma once

#include <functional>
#include <span>
#include <vector>

#include "shelab/coefficients.hpp"
#include "shelab/grid.hpp"
#include "shelab/rng.hpp"

namespace shelab {

struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> values;
};

using Snapshots = std::vector<FieldSnapshot>;

/// Per-step standard normal draws xi^k_i, row k drives the step t_k -> t_{k+1}.
class NoiseSlab {
public:
    NoiseSlab() = default;
    NoiseSlab(int cells, int steps, rng::Lineage lineage = {});

    /// Draws every row from the lineage (same lineage, same slab).
    static NoiseSlab generate(const GridSpec& grid, const rng::Lineage& lineage);

    int cells() const { return cells_; }
    int steps() const { return steps_; }
    const rng::Lineage& lineage() const { return lineage_; }

    std::span<const double> step(int k) const {
        return {data_.data() + static_cast<std::size_t>(k) * cells_, static_cast<std::size_t>(cells_)};
    }
    std::span<double> step(int k) {
        return {data_.data() + static_cast<std::size_t>(k) * cells_, static_cast<std::size_t>(cells_)};
    }

    /// Noise on a grid coarser by `space_factor` cells and `time_factor` steps carrying the same
    /// white-noise cell masses: each coarse draw is the normalised sum of the fine draws it covers.
    NoiseSlab coarsen(int space_factor, int time_factor) const;

private:
    int cells_ = 0;
    int steps_ = 0;
    rng::Lineage lineage_{};
    std::vector<double> data_;
};

using CheckpointObserver =
    std::function<void(std::size_t index, double t, std::span<const double> values)>;

/// Explicit scheme on the periodic grid from u(0, .) = 1:
///   u^{k+1}_i = u^k_i + dt/(2 dx^2) (u^k_{i+1} - 2 u^k_i + u^k_{i-1}) + b(u^k_i) dt
///               + sigma(u^k_i) xi^k_i sqrt(dt/dx).
/// Calls `observer` at every checkpoint. Throws ConfigError on an invalid grid and
/// SimulationDiverged (naming the step) on a non-finite state.
void simulate(const GridSpec& grid, const CoefficientPair& coeffs, const rng::Lineage& lineage,
              const CheckpointObserver& observer);
Snapshots simulate(const GridSpec& grid, const CoefficientPair& coeffs,
                   const rng::Lineage& lineage);
Snapshots simulate(const GridSpec& grid, const CoefficientPair& coeffs, const NoiseSlab& noise);

/// A solution with its whole space-time path and the noise that drove it, for replay by the
/// tangent solvers.
class BaseRun {
public:
    BaseRun(GridSpec grid, CoefficientPair coeffs, NoiseSlab noise, std::vector<double> path);

    const GridSpec& grid() const { return grid_; }
    const CoefficientPair& coefficients() const { return coeffs_; }
    const NoiseSlab& noise() const { return noise_; }
    /// u at time level k (0..steps).
    std::span<const double> state(int k) const {
        return {path_.data() + static_cast<std::size_t>(k) * grid_.cells,
                static_cast<std::size_t>(grid_.cells)};
    }
    Snapshots snapshots() const;

private:
    GridSpec grid_;
    CoefficientPair coeffs_;
    NoiseSlab noise_;
    std::vector<double> path_;
};

BaseRun simulate_path(const GridSpec& grid, const CoefficientPair& coeffs,
                      const rng::Lineage& lineage);
BaseRun simulate_path(const GridSpec& grid, const CoefficientPair& coeffs, NoiseSlab noise);

/// Exact covariance of the explicit scheme with additive noise between cells `lag` apart at
/// time t (a time level): (dt/dx) (1/n) sum_k (1 - m_k^{2N}) / (1 - m_k^2) cos(2 pi k lag / n),
/// m_k = 1 - (dt/dx^2)(1 - cos(2 pi k / n)).
double lattice_additive_covariance(const GridSpec& grid, double t, int lag = 0);

}  // namespace shelab
