#include "shelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shelab/error.hpp"

namespace shelab {

namespace {
constexpr double kIndexTolerance = 1e-9;
}

int GridSpec::time_index(double t) const {
    const double k = t / dt();
    const double rk = std::round(k);
    if (!(std::abs(k - rk) <= kIndexTolerance * std::max(1.0, rk)) || rk < 0 || rk > steps) {
        std::ostringstream os;
        os << "time " << t << " is not on the time grid (dt = " << dt() << ")";
        throw DomainError(os.str());
    }
    return static_cast<int>(rk);
}

int GridSpec::cell_index(double xv) const {
    const double k = (xv + half_width) / dx() - 0.5;
    const double rk = std::round(k);
    if (!(std::abs(k - rk) <= kIndexTolerance * std::max(1.0, std::abs(rk))) || rk < 0 ||
        rk >= cells) {
        std::ostringstream os;
        os << "position " << xv << " is not a cell centre (dx = " << dx() << ")";
        throw DomainError(os.str());
    }
    return static_cast<int>(rk);
}

std::vector<int> GridSpec::checkpoint_steps() const {
    std::vector<int> out;
    out.reserve(checkpoints.size());
    for (double t : checkpoints) out.push_back(time_index(t));
    return out;
}

void GridSpec::validate(double max_radius) const {
    std::ostringstream os;
    if (!(half_width > 0.0) || cells <= 0 || !(final_time > 0.0) || steps <= 0) {
        os << "grid: half_width, cells, final_time and steps must be positive";
    } else if (cells % 2 != 0) {
        os << "grid: cell count must be even (got " << cells << ")";
    } else if (cfl() > 1.0) {
        os << "grid: CFL ratio dt/dx^2 = " << cfl() << " exceeds 1";
    } else if (checkpoints.empty()) {
        os << "grid: at least one checkpoint is required";
    } else if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
               std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end()) {
        os << "grid: checkpoints must be strictly increasing";
    } else if (checkpoints.front() <= 0.0 || checkpoints.back() > final_time * (1.0 + 1e-12)) {
        os << "grid: checkpoints must lie in (0, T]";
    } else if (half_width < max_radius + 6.0 * std::sqrt(final_time)) {
        os << "grid: half-width " << half_width << " is below R_max + 6 sqrt(T) = "
           << max_radius + 6.0 * std::sqrt(final_time);
    }
    if (!os.str().empty()) throw ConfigError(os.str());
    try {
        (void)checkpoint_steps();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("grid: checkpoint ") + e.what());
    }
}

GridSpec default_grid() {
    GridSpec g;
    g.half_width = 24.0;
    g.cells = 768;
    g.final_time = 1.0;
    g.steps = 1024;
    g.checkpoints = {0.25, 0.5, 0.75, 1.0};
    return g;
}

}  // namespace shelab
