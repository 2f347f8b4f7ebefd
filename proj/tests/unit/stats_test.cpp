#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "shelab/stats.hpp"

using namespace shelab::stats;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

StatsAccumulator accumulate(const std::vector<double>& v, std::size_t begin, std::size_t end) {
    StatsAccumulator a;
    for (std::size_t i = begin; i < end; ++i) a.add(v[i]);
    return a;
}

void expect_close(const StatsAccumulator& a, const StatsAccumulator& b, double rel) {
    ASSERT_EQ(a.count(), b.count());
    EXPECT_NEAR(a.mean(), b.mean(), rel * (1.0 + std::abs(b.mean())));
    EXPECT_NEAR(a.m2(), b.m2(), rel * std::abs(b.m2()));
    EXPECT_NEAR(a.m3(), b.m3(), rel * (std::abs(b.m3()) + std::abs(b.m2())));
    EXPECT_NEAR(a.m4(), b.m4(), rel * std::abs(b.m4()));
}

}  // namespace

TEST(Accumulator, MatchesTwoPassMoments) {
    const std::vector<double> v{1.0, 2.0, 4.0, 7.0, 11.0};
    const auto a = accumulate(v, 0, v.size());
    EXPECT_DOUBLE_EQ(a.mean(), 5.0);
    EXPECT_NEAR(a.variance(), 16.5, 1e-12);
    double m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        m3 += std::pow(x - 5.0, 3);
        m4 += std::pow(x - 5.0, 4);
    }
    EXPECT_NEAR(a.m3(), m3, 1e-10);
    EXPECT_NEAR(a.m4(), m4, 1e-9);
}

TEST(Accumulator, MergeIsAssociative) {
    const auto v = normals(3000, 5);
    const auto whole = accumulate(v, 0, v.size());
    const auto a = accumulate(v, 0, 700), b = accumulate(v, 700, 1900), c = accumulate(v, 1900, 3000);
    StatsAccumulator left = a;
    left.merge(b);
    left.merge(c);
    StatsAccumulator bc = b;
    bc.merge(c);
    StatsAccumulator right = a;
    right.merge(bc);
    expect_close(left, whole, 1e-12);
    expect_close(right, whole, 1e-12);
    expect_close(left, right, 1e-12);
}

TEST(Accumulator, MergeWithEmptyIsIdentity) {
    const auto v = normals(10, 9);
    auto a = accumulate(v, 0, v.size());
    const auto before = a;
    a.merge(StatsAccumulator{});
    expect_close(a, before, 0.0);
    StatsAccumulator e;
    e.merge(before);
    expect_close(e, before, 0.0);
}

TEST(Accumulator, GaussianShape) {
    const auto v = normals(200000, 3);
    const auto a = accumulate(v, 0, v.size());
    EXPECT_NEAR(a.skewness(), 0.0, 0.03);
    EXPECT_NEAR(a.excess_kurtosis(), 0.0, 0.05);
}

TEST(Jackknife, MeanErrorIsStandardError) {
    const auto v = normals(500, 11);
    const auto mean = [](std::span<const double> s) {
        return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    };
    const auto e = jackknife(v, mean);
    const auto a = accumulate(v, 0, v.size());
    EXPECT_NEAR(e.value, a.mean(), 1e-12);
    EXPECT_NEAR(e.error, std::sqrt(a.variance() / 500.0), 1e-10);
}

TEST(Jackknife, MeansVariantAgreesWithDirect) {
    const auto x = normals(300, 1), y = normals(300, 2);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < x.size(); ++i) rows.push_back({x[i], x[i] * x[i] + y[i]});
    const auto ratio = [](std::span<const double> m) { return m[1] / (1.0 + m[0] * m[0]); };
    const auto e = jackknife_means(rows, ratio);

    // Direct leave-one-out recomputation.
    const double n = static_cast<double>(rows.size());
    double s0 = 0.0, s1 = 0.0;
    for (const auto& r : rows) s0 += r[0], s1 += r[1];
    std::vector<double> loo;
    for (const auto& r : rows) {
        const double m[2] = {(s0 - r[0]) / (n - 1.0), (s1 - r[1]) / (n - 1.0)};
        loo.push_back(ratio(m));
    }
    const double full = ratio(std::vector<double>{s0 / n, s1 / n});
    const double bar = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : loo) ss += (v - bar) * (v - bar);
    EXPECT_NEAR(e.value, full, 1e-12);
    EXPECT_NEAR(e.error, std::sqrt((n - 1.0) / n * ss), 1e-10);
}

TEST(Normal, CdfAndQuantile) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-14);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    for (double p : {1e-6, 0.1, 0.5, 0.9, 1 - 1e-6}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12);
}

TEST(Ks, ExactForTinySample) {
    // Single point at 0: F_n jumps 0 -> 1 where Phi = 1/2.
    EXPECT_DOUBLE_EQ(ks_normal({0.0}), 0.5);
}

TEST(Ks, NullCalibration) {
    // Over many null samples the KS distance exceeds the band about 5% of the time and its
    // spread matches the limit-law standard deviation.
    const std::size_t n = 400;
    int above = 0;
    StatsAccumulator spread;
    for (int rep = 0; rep < 400; ++rep) {
        const double d = ks_normal(normals(n, 1000 + static_cast<std::uint64_t>(rep)));
        spread.add(d);
        if (d > ks_band(n)) ++above;
    }
    EXPECT_LT(above, 40);
    EXPECT_NEAR(std::sqrt(spread.variance()) / ks_null_sd(n), 1.0, 0.2);
    EXPECT_NEAR(ks_null_sd(1), 0.2603, 1e-3);
}

TEST(Ks, DetectsWrongScale) {
    auto v = normals(2000, 4);
    for (auto& x : v) x *= 1.5;
    EXPECT_GT(ks_normal(v), ks_band(v.size()));
}

TEST(TvProxy, SmallForNormalsLargeForUniform) {
    EXPECT_LT(tv_proxy_normal(normals(100000, 8)), 0.02);
    std::vector<double> u(10000);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / 10000.0;
    EXPECT_GT(tv_proxy_normal(u), 0.2);
}

TEST(Quantile, Type7) {
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0, 4.0}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.95), 4.8);
}

TEST(Ols, ExactLine) {
    const std::vector<double> x{2, 4, 8, 16}, y{1 + 4, 1 + 8, 1 + 16, 1 + 32};
    const auto e = ols_slope(x, y);
    EXPECT_NEAR(e.value, 2.0, 1e-14);
    EXPECT_NEAR(e.error, 0.0, 1e-12);
}
