#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "shelab/error.hpp"
#include "shelab/kernel.hpp"
#include "shelab/quadrature.hpp"
#include "shelab/solver.hpp"
#include "shelab/spectral.hpp"

using namespace shelab;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.half_width = 4.0;
    g.cells = 64;
    g.final_time = 0.25;
    g.steps = 64;
    g.checkpoints = {0.125, 0.25};
    return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(Grid, DefaultIsValid) {
    const auto g = default_grid();
    EXPECT_NO_THROW(g.validate(16.0));
    EXPECT_DOUBLE_EQ(g.dx(), 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(g.cfl(), 0.25);
}

TEST(Grid, Violations) {
    auto g = small_grid();
    g.steps = 8;  // CFL = 2
    EXPECT_THROW(g.validate(), ConfigError);
    g = small_grid();
    g.cells = 63;
    EXPECT_THROW(g.validate(), ConfigError);
    g = small_grid();
    g.checkpoints = {0.25, 0.125};
    EXPECT_THROW(g.validate(), ConfigError);
    g = small_grid();
    EXPECT_THROW(g.validate(2.0), ConfigError);  // 4 < 2 + 6 * 0.5
    g = small_grid();
    g.checkpoints = {0.1};
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Grid, Indices) {
    const auto g = small_grid();
    EXPECT_EQ(g.time_index(0.125), 32);
    EXPECT_EQ(g.cell_index(g.x(10)), 10);
    EXPECT_THROW(g.cell_index(0.0), DomainError);  // a cell edge
    EXPECT_EQ(g.checkpoint_steps(), (std::vector<int>{32, 64}));
}

TEST(Simulate, ZeroCoefficientsStayOne) {
    const auto snaps = simulate(small_grid(), CoefficientPair::affine(0, 0, 0, 0), rng::Lineage{1, 0});
    ASSERT_EQ(snaps.size(), 2u);
    for (const auto& s : snaps) {
        for (double v : s.values) EXPECT_EQ(v, 1.0);
    }
}

TEST(Simulate, LinearDecayOde) {
    const auto g = small_grid();
    const auto snaps = simulate(g, CoefficientPair::affine(0, -1, 0, 0), rng::Lineage{1, 0});
    const double expected = std::pow(1.0 - g.dt(), g.steps);  // Euler for u' = -u
    for (double v : snaps.back().values) EXPECT_NEAR(v, expected, 1e-14);
    EXPECT_NEAR(expected, std::exp(-0.25), 1e-3);
}

TEST(Simulate, Reproducible) {
    const auto g = small_grid();
    const auto c = CoefficientPair::smooth_bounded();
    const auto a = simulate(g, c, rng::Lineage{42, 7});
    const auto b = simulate(g, c, rng::Lineage{42, 7});
    const auto d = simulate(g, c, rng::Lineage{42, 8});
    EXPECT_EQ(a.back().values, b.back().values);
    EXPECT_NE(a.back().values, d.back().values);
}

TEST(Simulate, DivergenceNamesStep) {
    auto g = small_grid();
    const auto c = CoefficientPair::custom(
        "explosive", [](double u) { return u * u * u * 1e6; }, [](double u) { return 3e6 * u * u; },
        [](double u) { return 6e6 * u; }, [](double) { return 0.0; }, [](double) { return 0.0; },
        [](double) { return 0.0; }, 1e300, 0.0, 1e300, 0.0);
    try {
        simulate(g, c, rng::Lineage{1, 0});
        FAIL() << "expected divergence";
    } catch (const SimulationDiverged& e) {
        EXPECT_GT(e.step(), 0);
        EXPECT_LE(e.step(), g.steps);
    }
}

TEST(Simulate, SlabMatchesLineage) {
    const auto g = small_grid();
    const auto c = CoefficientPair::smooth_bounded();
    const rng::Lineage lin{3, 1};
    const auto a = simulate(g, c, lin);
    const auto b = simulate(g, c, NoiseSlab::generate(g, lin));
    EXPECT_EQ(a.back().values, b.back().values);
    const auto run = simulate_path(g, c, lin);
    EXPECT_EQ(run.snapshots().back().values, a.back().values);
}

TEST(NoiseSlab, CoarsenKeepsUnitVariance) {
    GridSpec g = small_grid();
    g.cells = 128;
    g.steps = 256;
    const auto fine = NoiseSlab::generate(g, {5, 0});
    const auto coarse = fine.coarsen(2, 4);
    EXPECT_EQ(coarse.cells(), 64);
    EXPECT_EQ(coarse.steps(), 64);
    double s = 0.0;
    for (int k = 0; k < coarse.steps(); ++k) {
        for (double v : coarse.step(k)) s += v * v;
    }
    EXPECT_NEAR(s / (64.0 * 64.0), 1.0, 0.1);
    // first coarse value is the normalised sum of its 8 fine parents
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) sum += fine.step(k)[0] + fine.step(k)[1];
    EXPECT_NEAR(coarse.step(0)[0], sum / std::sqrt(8.0), 1e-14);
}

TEST(LatticeCovariance, ConvergesToContinuum) {
    const auto g = default_grid();
    const double v = lattice_additive_covariance(g, 1.0);
    EXPECT_NEAR(v, 1.0 / std::sqrt(std::numbers::pi), 0.01);
    EXPECT_GT(v, 1.0 / std::sqrt(std::numbers::pi));
}

TEST(ExactAdditive, VarianceAndCovariance) {
    const double var = exact_additive_covariance(24.0, 1.0, 0.0);
    EXPECT_NEAR(var, 1.0 / std::sqrt(std::numbers::pi), 1e-6);
    // Cov at h = 1 equals int_0^1 G_{2s}(1) ds
    const double ref = quad::value_or_throw(
        quad::adaptive_simpson([](double s) { return s > 0 ? kernel::heat_kernel(2.0 * s, 1.0) : 0.0; },
                               0.0, 1.0, {1e-13, 1e-11, 60}),
        "cov");
    EXPECT_NEAR(exact_additive_covariance(24.0, 1.0, 1.0), ref, 1e-6);
}

TEST(ExactAdditive, RejectsNonAdditive) {
    EXPECT_THROW(exact_additive_sample(small_grid(), CoefficientPair::smooth_bounded(), {0.25}, {1, 0}),
                 MisuseError);
}

TEST(ExactAdditive, EnsembleMoments) {
    GridSpec g;
    g.half_width = 6.0;
    g.cells = 96;
    g.final_time = 1.0;
    g.steps = 256;
    g.checkpoints = {1.0};
    const int n = 400;
    double s1 = 0, s2 = 0, c1 = 0;
    long count = 0;
    for (int r = 0; r < n; ++r) {
        const auto snaps = exact_additive_sample(g, CoefficientPair::additive(), {0.5, 1.0},
                                                 {11, std::uint64_t(r), rng::Stream::spectral});
        const auto& v = snaps.back().values;
        const auto& h = snaps.front().values;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s1 += v[i] - 1.0;
            s2 += (v[i] - 1.0) * (v[i] - 1.0);
            c1 += (v[i] - 1.0) * (h[i] - 1.0);
            ++count;
        }
    }
    const double var_ref = exact_additive_covariance(6.0, 1.0, 0.0);
    EXPECT_NEAR(var_ref, 1.0 / std::sqrt(std::numbers::pi), 1e-6);
    // spatially correlated samples: generous band of about 4 effective standard errors
    EXPECT_NEAR(s1 / count, 0.0, 0.03);
    EXPECT_NEAR(s2 / count, var_ref, 0.04);
    // Cov(u(1,x), u(1/2,x)) = int_0^{1/2} G_{3/2 - 2r}(0) dr
    const double cross = (std::sqrt(1.5) - std::sqrt(0.5)) / std::sqrt(2.0 * std::numbers::pi);
    EXPECT_NEAR(c1 / count, cross, 0.04);
}

TEST(Picard, ZeroCoefficientsFixed) {
    const auto g = small_grid();
    const auto noise = NoiseSlab::generate(g, {1, 0});
    const auto res = picard_solve(g, CoefficientPair::affine(0, 0, 0, 0), noise, 3);
    ASSERT_EQ(res.deltas.size(), 3u);
    EXPECT_EQ(res.deltas[0], 0.0);
    for (double v : res.snapshots.back().values) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Picard, AdditiveFixedPointInOneStep) {
    const auto g = small_grid();
    const auto noise = NoiseSlab::generate(g, {1, 0});
    const auto res = picard_solve(g, CoefficientPair::additive(), noise, 3);
    EXPECT_GT(res.deltas[0], 0.0);
    EXPECT_LT(res.deltas[1], 1e-12);
}

TEST(Picard, ContractsForSmoothCoefficients) {
    const auto g = small_grid();
    const auto noise = NoiseSlab::generate(g, {2, 0});
    const auto res = picard_solve(g, CoefficientPair::smooth_bounded(), noise, 12);
    ASSERT_EQ(res.deltas.size(), 12u);
    EXPECT_LT(res.deltas.back(), 1e-3 * res.deltas.front());
}

TEST(Picard, AgreesWithEulerUnderRefinement) {
    // Shared noise at two resolutions: the fine pair is driven by the fine slab, the coarse pair
    // by its aggregate.
    GridSpec fine = small_grid();
    fine.cells = 128;
    fine.steps = 256;
    GridSpec coarse = small_grid();
    const auto c = CoefficientPair::smooth_bounded();
    double coarse_gap = 0.0, fine_gap = 0.0;
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
        const auto fine_noise = NoiseSlab::generate(fine, {9, rep});
        const auto coarse_noise = fine_noise.coarsen(2, 4);
        const auto fp = picard_solve(fine, c, fine_noise, 30);
        const auto fe = simulate(fine, c, fine_noise);
        const auto cp = picard_solve(coarse, c, coarse_noise, 30);
        const auto ce = simulate(coarse, c, coarse_noise);
        fine_gap += max_abs_diff(fp.snapshots.back().values, fe.back().values);
        coarse_gap += max_abs_diff(cp.snapshots.back().values, ce.back().values);
    }
    EXPECT_LT(fine_gap, coarse_gap);
}
