#include "shelab/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "shelab/error.hpp"
#include "shelab/kernel.hpp"

namespace shelab {

namespace {

struct Located {
    int level;
    int cell;
};

Located locate(const GridSpec& grid, Source s) {
    return {grid.time_index(s.t), grid.cell_index(s.x)};
}

// Periodic explicit diffusion step plus a pointwise term: out_i = v_i + c Lap v_i + extra_i.
template <class Extra>
void linear_step(std::span<const double> v, std::span<double> out, double half_cfl, Extra&& extra) {
    const std::size_t n = v.size();
    const auto at = [&](std::size_t i, double left, double right) {
        return v[i] + half_cfl * (left - 2.0 * v[i] + right) + extra(i);
    };
    out[0] = at(0, v[n - 1], v[1]);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = at(i, v[i - 1], v[i + 1]);
    out[n - 1] = at(n - 1, v[n - 2], v[0]);
}

void check_finite(std::span<const double> v, int level, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            std::ostringstream os;
            os << what << ": non-finite value at level " << level;
            throw SimulationDiverged(os.str(), level);
        }
    }
}

// Steps a first tangent from its source level; `visit(level, v)` sees every level from the source.
template <class Visit>
void run_tangent(const BaseRun& base, Located src, double mass_scale, Visit&& visit) {
    const auto& grid = base.grid();
    const auto& c = base.coefficients();
    const auto n = static_cast<std::size_t>(grid.cells);
    const double half_cfl = 0.5 * grid.cfl();
    const double dt = grid.dt();
    const double s = std::sqrt(dt / grid.dx());
    std::vector<double> v(n, 0.0), next(n);
    v[static_cast<std::size_t>(src.cell)] =
        mass_scale * c.sigma(base.state(src.level)[static_cast<std::size_t>(src.cell)]) / grid.dx();
    visit(src.level, std::span<const double>(v));
    for (int k = src.level; k < grid.steps; ++k) {
        const auto u = base.state(k);
        const auto xi = base.noise().step(k);
        linear_step(v, next, half_cfl, [&](std::size_t i) {
            return (c.db(u[i]) * dt + c.dsigma(u[i]) * xi[i] * s) * v[i];
        });
        v.swap(next);
        check_finite(v, k + 1, "tangent_simulate");
        visit(k + 1, std::span<const double>(v));
    }
}

}  // namespace

TangentField tangent_simulate(const BaseRun& base, Source source, double mass_scale) {
    const auto& grid = base.grid();
    const auto src = locate(grid, source);
    TangentField out;
    out.source = source;
    out.time_index = src.level;
    out.cell = src.cell;
    const auto cps = grid.checkpoint_steps();
    std::size_t ci = 0;
    for (; ci < cps.size() && cps[ci] < src.level; ++ci) {
        out.values.push_back({grid.checkpoints[ci], std::vector<double>(static_cast<std::size_t>(grid.cells), 0.0)});
    }
    run_tangent(base, src, mass_scale, [&](int level, std::span<const double> v) {
        while (ci < cps.size() && cps[ci] == level) {
            out.values.push_back({grid.checkpoints[ci], std::vector<double>(v.begin(), v.end())});
            ++ci;
        }
    });
    return out;
}

SecondTangentField second_tangent_simulate(const BaseRun& base, Source first, Source second) {
    const auto& grid = base.grid();
    const auto rz = locate(grid, first);
    const auto tw = locate(grid, second);
    if (!(tw.level < rz.level)) {
        throw OrderingError("second_tangent_simulate: requires theta < r");
    }
    const auto& c = base.coefficients();
    const auto n = static_cast<std::size_t>(grid.cells);
    const double half_cfl = 0.5 * grid.cfl();
    const double dt = grid.dt();
    const double s = std::sqrt(dt / grid.dx());

    // v_theta up to level r (kept), then v_theta, v_r and w advance together.
    std::vector<double> vt(n), vr(n, 0.0), w(n, 0.0), next(n);
    run_tangent(base, tw, 1.0, [&](int level, std::span<const double> v) {
        if (level == rz.level) std::copy(v.begin(), v.end(), vt.begin());
    });
    const auto z = static_cast<std::size_t>(rz.cell);
    const auto u_r = base.state(rz.level);
    vr[z] = c.sigma(u_r[z]) / grid.dx();
    w[z] = c.dsigma(u_r[z]) * vt[z] / grid.dx();

    SecondTangentField out;
    out.first = first;
    out.second = second;
    const auto cps = grid.checkpoint_steps();
    std::size_t ci = 0;
    const auto emit = [&](int level) {
        while (ci < cps.size() && cps[ci] <= level) {
            if (cps[ci] < level) {
                out.values.push_back({grid.checkpoints[ci], std::vector<double>(n, 0.0)});
            } else {
                out.values.push_back({grid.checkpoints[ci], w});
            }
            ++ci;
        }
    };
    emit(rz.level);
    std::vector<double> nvt(n), nvr(n);
    for (int k = rz.level; k < grid.steps; ++k) {
        const auto u = base.state(k);
        const auto xi = base.noise().step(k);
        linear_step(w, next, half_cfl, [&](std::size_t i) {
            const double vv = vr[i] * vt[i];
            return (c.d2b(u[i]) * vv + c.db(u[i]) * w[i]) * dt +
                   (c.d2sigma(u[i]) * vv + c.dsigma(u[i]) * w[i]) * xi[i] * s;
        });
        linear_step(vt, nvt, half_cfl, [&](std::size_t i) {
            return (c.db(u[i]) * dt + c.dsigma(u[i]) * xi[i] * s) * vt[i];
        });
        linear_step(vr, nvr, half_cfl, [&](std::size_t i) {
            return (c.db(u[i]) * dt + c.dsigma(u[i]) * xi[i] * s) * vr[i];
        });
        w.swap(next);
        vt.swap(nvt);
        vr.swap(nvr);
        check_finite(w, k + 1, "second_tangent_simulate");
        emit(k + 1);
    }
    return out;
}

MalliavinDesign default_design(const GridSpec& grid) {
    const double T = grid.final_time;
    const double z0 = grid.x(grid.cells / 2);
    MalliavinDesign d;
    d.first_sources = {{0.25 * T, z0}, {0.5 * T, z0}};
    d.second_sources = {{{0.5 * T, z0}, {0.25 * T, z0 - 0.5}}, {{0.5 * T, z0}, {0.375 * T, z0}}};
    return d;
}

std::vector<SamplePoint> build_sample_set(const GridSpec& grid, const MalliavinDesign& design) {
    constexpr double kMinShape = 1e-8;
    const double T = grid.final_time;
    const double dx = grid.dx();
    const int stride = std::max(1, design.cell_stride);
    std::vector<SamplePoint> pts;
    const auto& times = grid.checkpoints;
    for (std::size_t s = 0; s < design.first_sources.size(); ++s) {
        const auto src = design.first_sources[s];
        const auto loc = locate(grid, src);
        for (std::size_t c = 0; c < times.size(); ++c) {
            const double gap = times[c] - src.t;
            if (gap <= 0.0) continue;
            const int reach = static_cast<int>(std::floor(4.0 * std::sqrt(gap) / dx + 1e-9));
            for (int off = -reach; off <= reach; off += stride) {
                const int cell = ((loc.cell + off) % grid.cells + grid.cells) % grid.cells;
                const double shape = kernel::heat_kernel(gap, off * dx);
                if (shape < kMinShape) continue;
                pts.push_back({SampleKind::first, s, c, cell, times[c], src.x + off * dx, shape});
            }
        }
    }
    for (std::size_t s = 0; s < design.second_sources.size(); ++s) {
        const auto [rz, tw] = design.second_sources[s];
        const auto a = locate(grid, rz);
        const auto b = locate(grid, tw);
        if (!(b.level < a.level)) throw OrderingError("build_sample_set: requires theta < r");
        const double front = (1.0 + 1.0 / std::sqrt(rz.t - tw.t)) *
                             kernel::heat_kernel(8.0 * T, rz.x - tw.x);
        for (std::size_t c = 0; c < times.size(); ++c) {
            const double gap = times[c] - rz.t;
            if (gap <= 0.0) continue;
            const int reach = static_cast<int>(std::floor(4.0 * std::sqrt(gap) / dx + 1e-9));
            for (int off = -reach; off <= reach; off += stride) {
                const int cell = ((a.cell + off) % grid.cells + grid.cells) % grid.cells;
                const double x = rz.x + off * dx;
                const double shape = front * (kernel::heat_kernel(gap, x - rz.x) +
                                              kernel::heat_kernel(times[c] - tw.t, x - tw.x));
                if (shape < kMinShape) continue;
                pts.push_back({SampleKind::second, s, c, cell, times[c], x, shape});
            }
            pts.push_back({SampleKind::integrated, s, c, -1, times[c], 0.0, front});
        }
    }
    if (pts.empty()) throw StatisticsError("build_sample_set: empty resolved region");
    return pts;
}

std::vector<double> sample_replicate(const GridSpec& grid, const CoefficientPair& coeffs,
                                     const MalliavinDesign& design,
                                     const std::vector<SamplePoint>& points,
                                     const rng::Lineage& lineage) {
    const auto base = simulate_path(grid, coeffs, lineage);
    std::vector<TangentField> firsts;
    for (const auto& s : design.first_sources) firsts.push_back(tangent_simulate(base, s));
    std::vector<SecondTangentField> seconds;
    for (const auto& [a, b] : design.second_sources) {
        seconds.push_back(second_tangent_simulate(base, a, b));
    }
    const double dx = grid.dx();
    const double R = design.integrated_radius;
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        switch (p.kind) {
        case SampleKind::first:
            out.push_back(firsts[p.source].values[p.checkpoint].values[static_cast<std::size_t>(p.cell)]);
            break;
        case SampleKind::second:
            out.push_back(seconds[p.source].values[p.checkpoint].values[static_cast<std::size_t>(p.cell)]);
            break;
        case SampleKind::integrated: {
            const auto& w = seconds[p.source].values[p.checkpoint].values;
            double s = 0.0;
            for (int i = 0; i < grid.cells; ++i) {
                if (std::abs(grid.x(i)) <= R) s += w[static_cast<std::size_t>(i)];
            }
            out.push_back(s * dx);
            break;
        }
        }
    }
    return out;
}

const RatioSummary& DerivativeBoundReport::summary(SampleKind kind) const {
    for (const auto& s : summaries) {
        if (s.kind == kind) return s;
    }
    throw StatisticsError("derivative_bound_report: no samples of kind " + to_string(kind));
}

DerivativeBoundReport derivative_bound_report(const std::vector<SamplePoint>& points,
                                              const std::vector<std::vector<double>>& values,
                                              int p) {
    if (p != 2 && p != 4) throw DomainError("derivative_bound_report: p must be 2 or 4");
    if (points.empty()) throw StatisticsError("derivative_bound_report: empty resolved region");
    if (values.size() < 2) throw StatisticsError("derivative_bound_report: needs two replicates");
    DerivativeBoundReport rep;
    rep.p = p;
    rep.replicates = values.size();
    const double inv_p = 1.0 / p;
    const auto n = static_cast<double>(values.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        stats::StatsAccumulator acc;
        for (const auto& row : values) acc.add(std::pow(std::abs(row[k]), p));
        const double m = acc.mean();
        RatioRow r;
        r.point = points[k];
        r.ratio = std::pow(m, inv_p) / points[k].shape;
        // delta method: d(m^{1/p}) = m^{1/p - 1} dm / p
        const double se_m = std::sqrt(acc.variance() / n);
        r.error = m > 0.0 ? std::pow(m, inv_p - 1.0) * se_m * inv_p / points[k].shape : 0.0;
        rep.rows.push_back(r);
    }
    for (auto kind : {SampleKind::first, SampleKind::second, SampleKind::integrated}) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < points.size(); ++k) {
            if (points[k].kind == kind) idx.push_back(k);
        }
        if (idx.empty()) continue;
        RatioSummary s;
        s.kind = kind;
        s.count = idx.size();
        std::vector<double> ratios;
        for (auto k : idx) ratios.push_back(rep.rows[k].ratio);
        s.min = *std::min_element(ratios.begin(), ratios.end());
        s.median = stats::quantile(ratios, 0.5);
        s.q95 = stats::quantile(ratios, 0.95);
        std::vector<std::vector<double>> cols;
        cols.reserve(values.size());
        for (const auto& row : values) {
            std::vector<double> c;
            c.reserve(idx.size());
            for (auto k : idx) c.push_back(std::pow(std::abs(row[k]), p));
            cols.push_back(std::move(c));
        }
        s.max = stats::jackknife_means(cols, [&](std::span<const double> means) {
            double best = 0.0;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                best = std::max(best, std::pow(means[j], inv_p) / points[idx[j]].shape);
            }
            return best;
        });
        s.finite = std::isfinite(s.max.value);
        rep.summaries.push_back(s);
    }
    return rep;
}

std::string to_string(SampleKind kind) {
    switch (kind) {
    case SampleKind::first: return "first";
    case SampleKind::second: return "second";
    case SampleKind::integrated: return "integrated";
    }
    return "unknown";
}

}  // namespace shelab
