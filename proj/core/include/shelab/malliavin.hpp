#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shelab/solver.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// A space-time point (r, z); r must be a time level and z a cell centre.
struct Source {
    double t = 0.0;
    double x = 0.0;
};

/// v(t, .) = D_{r,z} u(t, .) at the grid checkpoints; zero at checkpoints before r.
struct TangentField {
    Source source;
    int time_index = 0;
    int cell = 0;
    Snapshots values;
};

/// D^2_{(r,z),(theta,w)} u(t, .) at the checkpoints; zero before r.
struct SecondTangentField {
    Source first;   // (r, z)
    Source second;  // (theta, w), theta < r
    Snapshots values;
};

/// Sets v(r, .) = mass_scale * sigma(u(r, z)) / dx at cell z, then steps
///   v^{k+1} = v^k + dt/(2 dx^2) Lap v^k + b'(u^k) v^k dt + sigma'(u^k) v^k xi^k sqrt(dt/dx)
/// with the base run's noise. DomainError for an off-grid source.
TangentField tangent_simulate(const BaseRun& base, Source source, double mass_scale = 1.0);

/// Sets w(r, .) = sigma'(u(r, z)) v_{theta,w}(r, z) / dx at cell z, then steps
///   w^{k+1} = w^k + dt/(2 dx^2) Lap w^k + (b''(u) v_r v_theta + b'(u) w) dt
///             + (sigma''(u) v_r v_theta + sigma'(u) w) xi^k sqrt(dt/dx),
/// with both first tangents replayed on the same noise. OrderingError unless theta < r.
SecondTangentField second_tangent_simulate(const BaseRun& base, Source first, Source second);

/// Sources and sample set of one Malliavin experiment.
struct MalliavinDesign {
    std::vector<Source> first_sources;
    std::vector<std::pair<Source, Source>> second_sources;  // ((r, z), (theta, w)), theta < r
    int cell_stride = 2;             // subsampling of the resolved region
    double integrated_radius = 4.0;  // R of int_{-R}^{R} w dx
};

/// Default experiment on `grid`: first-derivative sources at r = T/4 and T/2 above the centre
/// cell; second-derivative pairs ((T/2, z0), (T/4, z0 - 1/2)) and ((T/2, z0), (3T/8, z0)).
MalliavinDesign default_design(const GridSpec& grid);

enum class SampleKind { first, second, integrated };

/// One sampled quantity and the bound shape it is divided by.
struct SamplePoint {
    SampleKind kind = SampleKind::first;
    std::size_t source = 0;  // index into first_sources or second_sources
    std::size_t checkpoint = 0;
    int cell = -1;           // -1 for integrated
    double t = 0.0;
    double x = 0.0;
    double shape = 0.0;
};

/// Resolved region only: |x - z| <= 4 sqrt(t - r) and shape >= 1e-8. StatisticsError if empty.
std::vector<SamplePoint> build_sample_set(const GridSpec& grid, const MalliavinDesign& design);

/// Values of every sample point for one replicate (base run from `lineage`).
std::vector<double> sample_replicate(const GridSpec& grid, const CoefficientPair& coeffs,
                                     const MalliavinDesign& design,
                                     const std::vector<SamplePoint>& points,
                                     const rng::Lineage& lineage);

struct RatioRow {
    SamplePoint point;
    double ratio = 0.0;  // ||.||_p / shape
    double error = 0.0;
};

struct RatioSummary {
    SampleKind kind = SampleKind::first;
    std::size_t count = 0;
    stats::Estimate max;  // jackknife error of the max ratio
    double min = 0.0;
    double median = 0.0;
    double q95 = 0.0;
    bool finite = true;
};

struct DerivativeBoundReport {
    int p = 2;
    std::size_t replicates = 0;
    std::vector<RatioRow> rows;
    std::vector<RatioSummary> summaries;  // one per kind present
    const RatioSummary& summary(SampleKind kind) const;
};

/// `values[i]` is sample_replicate output of replicate i. p in {2, 4}. StatisticsError on an
/// empty sample set or fewer than two replicates.
DerivativeBoundReport derivative_bound_report(const std::vector<SamplePoint>& points,
                                              const std::vector<std::vector<double>>& values,
                                              int p);

std::string to_string(SampleKind kind);

}  // namespace shelab
