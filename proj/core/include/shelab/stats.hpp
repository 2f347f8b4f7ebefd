#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace shelab::stats {

/// Streaming central moments up to order four (Welford / Pebay). Two accumulators merge into
/// the accumulator of the concatenated samples.
class StatsAccumulator {
public:
    void add(double x);
    void merge(const StatsAccumulator& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    double m3() const { return m3_; }
    double m4() const { return m4_; }

    /// Unbiased variance; 0 for fewer than two samples.
    double variance() const;
    double skewness() const;
    /// Sample excess kurtosis m4 n / m2^2 - 3.
    double excess_kurtosis() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double error = 0.0;  // standard error
};

/// Leave-one-out jackknife of a statistic of the sample. O(n) statistic calls.
Estimate jackknife(std::span<const double> sample,
                   const std::function<double(std::span<const double>)>& statistic);

/// Jackknife for statistics that are a function of several per-replicate columns (one row per
/// replicate). The leave-one-out values come from subtracting the row from column sums, so the
/// statistic receives column means.
Estimate jackknife_means(const std::vector<std::vector<double>>& rows,
                         const std::function<double(std::span<const double>)>& of_means);

double normal_cdf(double x);
double normal_quantile(double p);

/// Kolmogorov-Smirnov distance of the empirical law of `sample` to N(0, 1).
double ks_normal(std::vector<double> sample);

/// Standard deviation of the KS distance under the null, from the Kolmogorov limit law:
/// sd(sqrt(n) D_n) -> 0.2603.
double ks_null_sd(std::size_t n);

/// 95% Kolmogorov band 1.36 / sqrt(n).
inline double ks_band(std::size_t n) { return 1.358 / std::sqrt(static_cast<double>(n)); }

/// Histogram total-variation proxy: (1/2) sum |observed frequency - 1/bins| over `bins`
/// equiprobable cells of N(0, 1).
double tv_proxy_normal(std::span<const double> sample, int bins = 32);

/// Sample quantile with linear interpolation (type 7).
double quantile(std::vector<double> sample, double p);

/// Ordinary least squares y = a + b x; returns b with its standard error.
Estimate ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace shelab::stats
