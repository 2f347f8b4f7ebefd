#pragma once

#include <vector>

namespace shelab {

/// Space-time discretization of the periodic domain [-L, L) x [0, T].
/// Cells are centred at x_i = -L + (i + 1/2) dx; time levels are t_k = k dt.
struct GridSpec {
    double half_width = 24.0;
    int cells = 768;
    double final_time = 1.0;
    int steps = 1024;
    std::vector<double> checkpoints{1.0};

    double dx() const { return 2.0 * half_width / cells; }
    double dt() const { return final_time / steps; }
    /// dt / dx^2; the explicit scheme (diffusion coefficient 1/2) is stable for <= 1.
    double cfl() const { return dt() / (dx() * dx()); }
    double x(int i) const { return -half_width + (i + 0.5) * dx(); }

    /// Time index of `t`; DomainError unless t is a time level within tolerance.
    int time_index(double t) const;
    /// Cell index whose centre is `x`; DomainError unless x is a cell centre.
    int cell_index(double x) const;
    /// Time indices of all checkpoints, in order.
    std::vector<int> checkpoint_steps() const;

    /// ConfigError on: non-positive sizes, odd cell count, CFL > 1, unsorted or off-grid
    /// checkpoints, or L < max_radius + 6 sqrt(T).
    void validate(double max_radius = 0.0) const;
};

/// Desk-scale default: L = 24, 768 cells (dx = 1/16), T = 1, 1024 steps (CFL 0.25).
GridSpec default_grid();

}  // namespace shelab
