#include "shelab/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shelab/error.hpp"

namespace shelab::stats {

void StatsAccumulator::add(double x) {
    StatsAccumulator one;
    one.n_ = 1;
    one.mean_ = x;
    merge(one);
}

void StatsAccumulator::merge(const StatsAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double d = o.mean_ - mean_;
    const double d2 = d * d;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d * d2 * na * nb * (na - nb) / (n * n) +
                      3.0 * d * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * d * (na * o.m3_ - nb * m3_) / n;
    mean_ += d * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
}

double StatsAccumulator::variance() const {
    return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double StatsAccumulator::skewness() const {
    if (n_ < 2 || m2_ <= 0.0) return 0.0;
    const double n = static_cast<double>(n_);
    return std::sqrt(n) * m3_ / std::pow(m2_, 1.5);
}

double StatsAccumulator::excess_kurtosis() const {
    if (n_ < 2 || m2_ <= 0.0) return 0.0;
    const double n = static_cast<double>(n_);
    return n * m4_ / (m2_ * m2_) - 3.0;
}

Estimate jackknife(std::span<const double> sample,
                   const std::function<double(std::span<const double>)>& statistic) {
    const std::size_t n = sample.size();
    if (n < 2) throw StatisticsError("jackknife: needs at least two samples");
    Estimate out;
    out.value = statistic(sample);
    std::vector<double> rest(n - 1);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(i), rest.begin());
        std::copy(sample.begin() + static_cast<std::ptrdiff_t>(i) + 1, sample.end(),
                  rest.begin() + static_cast<std::ptrdiff_t>(i));
        const double v = statistic(rest);
        sum += v;
        sumsq += v * v;
    }
    const double nn = static_cast<double>(n);
    const double mean = sum / nn;
    out.error = std::sqrt(std::max(0.0, (nn - 1.0) / nn * (sumsq - nn * mean * mean)));
    return out;
}

Estimate jackknife_means(const std::vector<std::vector<double>>& rows,
                         const std::function<double(std::span<const double>)>& of_means) {
    const std::size_t n = rows.size();
    if (n < 2) throw StatisticsError("jackknife_means: needs at least two rows");
    const std::size_t k = rows.front().size();
    std::vector<double> total(k, 0.0);
    for (const auto& r : rows) {
        if (r.size() != k) throw StatisticsError("jackknife_means: ragged rows");
        for (std::size_t j = 0; j < k; ++j) total[j] += r[j];
    }
    const double nn = static_cast<double>(n);
    std::vector<double> means(k);
    for (std::size_t j = 0; j < k; ++j) means[j] = total[j] / nn;
    Estimate out;
    out.value = of_means(means);
    double sum = 0.0, sumsq = 0.0;
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < k; ++j) means[j] = (total[j] - r[j]) / (nn - 1.0);
        const double v = of_means(means);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / nn;
    out.error = std::sqrt(std::max(0.0, (nn - 1.0) / nn * (sumsq - nn * mean * mean)));
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double ks_normal(std::vector<double> sample) {
    if (sample.empty()) throw StatisticsError("ks_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double ks_null_sd(std::size_t n) {
    // Kolmogorov law: E K = sqrt(pi/2) ln 2, E K^2 = pi^2 / 12.
    const double mean = std::sqrt(0.5 * std::numbers::pi) * std::numbers::ln2;
    const double sd = std::sqrt(std::numbers::pi * std::numbers::pi / 12.0 - mean * mean);
    return sd / std::sqrt(static_cast<double>(n));
}

double tv_proxy_normal(std::span<const double> sample, int bins) {
    if (sample.empty()) throw StatisticsError("tv_proxy_normal: empty sample");
    if (bins < 2) throw DomainError("tv_proxy_normal: needs at least two bins");
    std::vector<double> edges(static_cast<std::size_t>(bins - 1));
    for (int i = 1; i < bins; ++i) {
        edges[static_cast<std::size_t>(i - 1)] = normal_quantile(static_cast<double>(i) / bins);
    }
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : sample) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        counts[static_cast<std::size_t>(it - edges.begin())] += 1.0;
    }
    const double n = static_cast<double>(sample.size());
    double tv = 0.0;
    for (double c : counts) tv += std::abs(c / n - 1.0 / bins);
    return 0.5 * tv;
}

double quantile(std::vector<double> sample, double p) {
    if (sample.empty()) throw StatisticsError("quantile: empty sample");
    std::sort(sample.begin(), sample.end());
    const double h = (static_cast<double>(sample.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sample.size() - 1);
    return sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

Estimate ols_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw StatisticsError("ols_slope: needs matching samples, n >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw StatisticsError("ols_slope: degenerate abscissae");
    Estimate out;
    out.value = sxy / sxx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = y[i] - my - out.value * (x[i] - mx);
            rss += e * e;
        }
        out.error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return out;
}

}  // namespace shelab::stats
