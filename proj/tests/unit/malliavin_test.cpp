#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "shelab/config.hpp"
#include "shelab/error.hpp"
#include "shelab/malliavin.hpp"
#include "shelab/solver.hpp"

using namespace shelab;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.half_width = 4.0;
    g.cells = 64;
    g.final_time = 0.25;
    g.steps = 48;  // dt / dx^2 = 1/3
    g.checkpoints = {0.0625, 0.125, 0.1875, 0.25};
    return g;
}

double mass(const std::vector<double>& v, double dx) { return std::accumulate(v.begin(), v.end(), 0.0) * dx; }

}  // namespace

TEST(Tangent, AdaptedAndStartsAtTheSource) {
    const auto g = small_grid();
    const auto base = simulate_path(g, CoefficientPair::smooth_bounded(), rng::Lineage{3, 0});
    const Source src{0.125, g.x(32)};
    const auto v = tangent_simulate(base, src);
    ASSERT_EQ(v.values.size(), 4u);
    for (double x : v.values[0].values) EXPECT_EQ(x, 0.0);  // t = 1/16 < r
    // At t = r the field is the lattice delta sigma(u(r, z)) / dx.
    const double sig = CoefficientPair::smooth_bounded().sigma(base.state(24)[32]);
    for (int i = 0; i < g.cells; ++i) {
        EXPECT_DOUBLE_EQ(v.values[1].values[static_cast<std::size_t>(i)], i == 32 ? sig / g.dx() : 0.0);
    }
}

TEST(Tangent, LinearInTheInitialMass) {
    const auto g = small_grid();
    const auto base = simulate_path(g, CoefficientPair::smooth_bounded(), rng::Lineage{4, 1});
    const Source src{0.0625, g.x(20)};
    const auto a = tangent_simulate(base, src);
    const auto b = tangent_simulate(base, src, 2.0);
    for (std::size_t c = 0; c < a.values.size(); ++c) {
        for (std::size_t i = 0; i < a.values[c].values.size(); ++i) {
            EXPECT_NEAR(b.values[c].values[i], 2.0 * a.values[c].values[i],
                        1e-14 * (1.0 + std::abs(a.values[c].values[i])));
        }
    }
}

TEST(Tangent, OffGridSourceIsDomainError) {
    const auto g = small_grid();
    const auto base = simulate_path(g, CoefficientPair::additive(), rng::Lineage{1, 0});
    EXPECT_THROW(tangent_simulate(base, Source{0.1, g.x(3)}), DomainError);
    EXPECT_THROW(tangent_simulate(base, Source{0.125, g.x(3) + 0.01}), DomainError);
}

TEST(Tangent, LinearCoefficientsWithoutNoiseConserveScaledMass) {
    // b = lambda u, sigma = u, zero noise: u = (1 + lambda dt)^k, the tangent mass grows by the
    // same factor, and the second tangent starts from v_theta(r, z) / dx.
    const auto g = small_grid();
    const double lambda = 0.7;
    const auto coeffs = CoefficientPair::linear(lambda);
    const auto base = simulate_path(g, coeffs, NoiseSlab(g.cells, g.steps));
    const double growth = 1.0 + lambda * g.dt();
    const Source r{0.125, g.x(32)}, theta{0.0625, g.x(30)};
    const auto v = tangent_simulate(base, r);
    const auto v_theta = tangent_simulate(base, theta);
    for (std::size_t c = 1; c < 4; ++c) {
        const int k = g.time_index(g.checkpoints[c]);
        EXPECT_NEAR(mass(v.values[c].values, g.dx()), std::pow(growth, k), 1e-12);
    }
    const auto w = second_tangent_simulate(base, r, theta);
    const double start = v_theta.values[1].values[32];
    for (std::size_t c = 1; c < 4; ++c) {
        const int k = g.time_index(g.checkpoints[c]) - 24;
        EXPECT_NEAR(mass(w.values[c].values, g.dx()), start * std::pow(growth, k), 1e-12 * (1.0 + start));
    }
    for (double x : w.values[0].values) EXPECT_EQ(x, 0.0);
}

TEST(SecondTangent, OrderingError) {
    const auto g = small_grid();
    const auto base = simulate_path(g, CoefficientPair::smooth_bounded(), rng::Lineage{1, 0});
    const Source a{0.125, g.x(32)}, b{0.125, g.x(30)}, c{0.1875, g.x(30)};
    EXPECT_THROW(second_tangent_simulate(base, a, b), OrderingError);
    EXPECT_THROW(second_tangent_simulate(base, a, c), OrderingError);
    EXPECT_NO_THROW(second_tangent_simulate(base, c, a));
}

TEST(SecondTangent, VanishesForAdditiveNoise) {
    const auto g = small_grid();
    const auto base = simulate_path(g, CoefficientPair::additive(), rng::Lineage{9, 2});
    const auto w = second_tangent_simulate(base, Source{0.1875, g.x(32)}, Source{0.0625, g.x(28)});
    for (const auto& s : w.values) {
        for (double x : s.values) EXPECT_EQ(x, 0.0);
    }
}

TEST(DerivativeBounds, AdditiveFirstRatioIsOne) {
    const auto grid = malliavin_default_grid();
    const auto design = default_design(grid);
    const auto points = build_sample_set(grid, design);
    std::vector<std::vector<double>> values;
    for (std::uint64_t r = 0; r < 2; ++r) {
        values.push_back(sample_replicate(grid, CoefficientPair::additive(), design, points, {5, r}));
    }
    for (int p : {2, 4}) {
        const auto rep = derivative_bound_report(points, values, p);
        const auto& first = rep.summary(SampleKind::first);
        EXPECT_GT(first.count, 100u);
        EXPECT_NEAR(first.max.value, 1.0, 2e-3);
        EXPECT_NEAR(first.min, 1.0, 2e-3);
        EXPECT_EQ(rep.summary(SampleKind::second).max.value, 0.0);
        EXPECT_EQ(rep.summary(SampleKind::integrated).max.value, 0.0);
    }
}

TEST(DerivativeBounds, NeedsTwoReplicates) {
    const auto grid = malliavin_default_grid();
    const auto design = default_design(grid);
    const auto points = build_sample_set(grid, design);
    const std::vector<std::vector<double>> one{
        sample_replicate(grid, CoefficientPair::additive(), design, points, {5, 0})};
    EXPECT_THROW(derivative_bound_report(points, one, 2), StatisticsError);
}
