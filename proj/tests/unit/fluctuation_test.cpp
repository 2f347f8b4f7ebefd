#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "shelab/error.hpp"
#include "shelab/fluctuation.hpp"
#include "shelab/quadrature.hpp"

using namespace shelab;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.half_width = 8.0;
    g.cells = 128;
    g.final_time = 0.25;
    g.steps = 128;
    g.checkpoints = {0.125, 0.25};
    return g;
}

RecordLayout small_layout() {
    ErgodicFunctional cos_u{"cos_u", false, {1.0}, {0.0}};
    return RecordLayout(small_grid(), {1.0, 2.0}, {{0, 0}, {1, 1}, {0, 1}}, {cos_u}, {1.0, 2.0}, 1);
}

Snapshots cosine_field(const GridSpec& g, int k, double amp) {
    Snapshots s;
    for (double t : g.checkpoints) {
        FieldSnapshot f{t, std::vector<double>(static_cast<std::size_t>(g.cells))};
        for (int i = 0; i < g.cells; ++i) {
            f.values[static_cast<std::size_t>(i)] =
                1.0 + amp * std::cos(2.0 * std::numbers::pi * k * i / g.cells);
        }
        s.push_back(f);
    }
    return s;
}

}  // namespace

TEST(AdditiveRho, DiagonalAtZeroIsPointwiseVariance) {
    for (double t : {0.25, 1.0, 2.0}) EXPECT_NEAR(additive_rho(t, t, 0.0), std::sqrt(t / std::numbers::pi), 1e-14);
}

TEST(AdditiveRho, IntegratesToMinTime) {
    for (auto [t, s] : {std::pair{1.0, 1.0}, std::pair{0.25, 1.0}, std::pair{0.5, 0.75}}) {
        const double total =
            2.0 * quad::adaptive_simpson_panels([&](double z) { return additive_rho(t, s, z); }, 0.0, 40.0, 40,
                                                {1e-14, 1e-12})
                      .value;
        EXPECT_NEAR(total, std::min(t, s), 1e-9);
    }
}

TEST(AdditiveVariance, OracleMatchesFiniteR) {
    for (double t : {0.25, 1.0}) {
        for (double r : {0.5, 2.0, 8.0, 16.0}) {
            const double a = additive_variance_oracle(t, r);
            const double b = additive_variance_finite_r(t, r);
            EXPECT_NEAR(a / b, 1.0, 1e-6) << "t=" << t << " R=" << r;
        }
    }
}

TEST(AdditiveVariance, LinearInRadiusWithSlopeTwoT) {
    // Once 2R exceeds the support of rho the finite-R formula is exactly affine in R.
    for (double t : {0.5, 1.0}) {
        const double slope = (additive_variance_finite_r(t, 16.0) - additive_variance_finite_r(t, 8.0)) / 8.0;
        EXPECT_NEAR(slope, 2.0 * t, 1e-8);
    }
}

TEST(SpatialAverage, ConstantFieldGivesZero) {
    const auto g = small_grid();
    const std::vector<double> u(128, 3.5);
    EXPECT_DOUBLE_EQ(spatial_average(g, u, 2.0, 3.5), 0.0);
    EXPECT_NEAR(spatial_average(g, u, 2.0, 3.0), 0.5 * 4.0, 1e-13);
}

TEST(SpatialAverage, UnsafeRadiusIsConfigError) {
    const auto g = small_grid();  // safe radius 8 - 6 sqrt(0.25) = 5
    const std::vector<double> u(128, 1.0);
    EXPECT_NO_THROW(spatial_average(g, u, 5.0, 1.0));
    EXPECT_THROW(spatial_average(g, u, 5.5, 1.0), ConfigError);
}

TEST(RecordLayout, IndicesAreDistinctAndCoverTheRecord) {
    const auto layout = small_layout();
    std::vector<int> seen(layout.size(), 0);
    for (std::size_t c = 0; c < 2; ++c) {
        for (int p : {1, 2, 4}) ++seen[layout.moment(c, p)];
        for (std::size_t r = 0; r < 2; ++r) ++seen[layout.fluctuation(c, r)];
    }
    for (std::size_t p = 0; p < layout.pairs().size(); ++p) {
        for (int l = -layout.max_lag(p); l <= layout.max_lag(p); ++l) ++seen[layout.lag(p, l)];
    }
    for (std::size_t r = 0; r < 2; ++r) ++seen[layout.ergodic(0, r)];
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_EQ(layout.max_lag(0), 17);  // ceil(6 sqrt(0.125) / 0.125)
    EXPECT_EQ(layout.max_lag(1), 24);
    EXPECT_THROW(layout.radius_index(3.0), DomainError);
}

TEST(MakeRecord, CosineFieldMoments) {
    const auto layout = small_layout();
    const auto g = small_grid();
    const int k = 4;
    const auto snaps = cosine_field(g, k, 0.5);
    const std::vector<double> mean{1.0, 1.0};
    const auto rec = make_record(layout, snaps, mean);
    EXPECT_NEAR(rec[layout.moment(1, 1)], 0.0, 1e-14);
    EXPECT_NEAR(rec[layout.moment(1, 2)], 0.125, 1e-14);
    EXPECT_NEAR(rec[layout.moment(1, 4)], 3.0 / 8.0 * 0.0625, 1e-14);
    for (int l : {0, 3, -7, 24}) {
        EXPECT_NEAR(rec[layout.lag(1, l)], 0.125 * std::cos(2.0 * std::numbers::pi * k * l / g.cells), 1e-14);
    }
    // Ergodic average of cos(u) over cells with centre in [0, R].
    double direct = 0.0;
    for (int i = 64; i < 64 + 16; ++i) direct += std::cos(snaps[1].values[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(rec[layout.ergodic(0, 1)], direct / 16.0, 1e-14);
}

TEST(Reports, RefuseTooFewReplicates) {
    const auto layout = small_layout();
    Ensemble ens{layout, std::vector<std::vector<double>>(29, std::vector<double>(layout.size(), 0.0))};
    EXPECT_THROW(covariance_profile(ens, 0.25, 0.25), StatisticsError);
    EXPECT_THROW(normality_report(std::vector<double>(499, 1.0)), StatisticsError);
    EXPECT_THROW(variance_scaling_report(ens, 0.25, {1.0, 2.0}), StatisticsError);
}

TEST(Reports, ZeroVarianceIsStatisticsError) {
    EXPECT_THROW(normality_report(std::vector<double>(600, 0.0)), StatisticsError);
}

TEST(Reports, ConstantEnsembleHasZeroFluctuation) {
    // Field identically equal to the mean curve: F = 0 and every covariance vanishes.
    const auto layout = small_layout();
    const auto g = small_grid();
    const auto snaps = cosine_field(g, 1, 0.0);
    const auto rec = make_record(layout, snaps, std::vector<double>{1.0, 1.0});
    Ensemble ens{layout, std::vector<std::vector<double>>(40, rec)};
    const auto prof = covariance_profile(ens, 0.25, 0.25);
    EXPECT_DOUBLE_EQ(prof.sigma, 0.0);
    for (double r : prof.rho) EXPECT_DOUBLE_EQ(r, 0.0);
    EXPECT_THROW(normalized_fluctuations(ens, 0.25, 2.0), StatisticsError);
}
