#include "shelab/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "shelab/error.hpp"
#include "shelab/quadrature.hpp"

namespace shelab {

namespace {

constexpr double kTol = 1e-9;

int cells_in(double length, double dx, const char* what) {
    const double k = length / dx;
    const double r = std::round(k);
    if (std::abs(k - r) > kTol * std::max(1.0, k)) {
        std::ostringstream os;
        os << what << ": " << length << " is not a multiple of dx = " << dx;
        throw ConfigError(os.str());
    }
    return static_cast<int>(r);
}

double safe_radius(const GridSpec& grid) {
    return grid.half_width - 6.0 * std::sqrt(grid.final_time);
}

void check_radius(const GridSpec& grid, double radius) {
    if (!(radius >= 0.0)) throw ConfigError("radius must be non-negative");
    if (radius > safe_radius(grid) + kTol) {
        std::ostringstream os;
        os << "radius " << radius << " exceeds the safe region L - 6 sqrt(T) = " << safe_radius(grid);
        throw ConfigError(os.str());
    }
}

stats::Estimate column_mean(const Ensemble& ens, std::size_t column) {
    stats::StatsAccumulator acc;
    for (const auto& row : ens.rows) acc.add(row[column]);
    return {acc.mean(), std::sqrt(acc.variance() / static_cast<double>(acc.count()))};
}

stats::Estimate mean_of(const std::vector<double>& values) {
    stats::StatsAccumulator acc;
    for (double v : values) acc.add(v);
    return {acc.mean(), std::sqrt(acc.variance() / static_cast<double>(acc.count()))};
}

void require_rows(const Ensemble& ens, std::size_t minimum, const char* what) {
    if (ens.size() < minimum) {
        std::ostringstream os;
        os << what << ": needs at least " << minimum << " replicates, got " << ens.size();
        throw StatisticsError(os.str());
    }
}

}  // namespace

double spatial_average(const GridSpec& grid, std::span<const double> values, double radius,
                       double mean) {
    check_radius(grid, radius);
    if (values.size() != static_cast<std::size_t>(grid.cells)) {
        throw DomainError("spatial_average: field length does not match the grid");
    }
    const double dx = grid.dx();
    double sum = 0.0;
    for (int i = 0; i < grid.cells; ++i) {
        if (std::abs(grid.x(i)) <= radius) sum += values[static_cast<std::size_t>(i)] - mean;
    }
    return sum * dx;
}

RecordLayout::RecordLayout(const GridSpec& grid, std::vector<double> radii,
                           std::vector<std::pair<int, int>> pairs,
                           std::vector<ErgodicFunctional> functionals,
                           std::vector<double> ergodic_radii, int ergodic_checkpoint)
    : grid_(grid),
      radii_(std::move(radii)),
      pairs_(std::move(pairs)),
      functionals_(std::move(functionals)),
      ergodic_radii_(std::move(ergodic_radii)),
      ergodic_checkpoint_(ergodic_checkpoint) {
    const auto nc = grid_.checkpoints.size();
    for (double r : radii_) check_radius(grid_, r);
    for (double r : ergodic_radii_) {
        check_radius(grid_, r);
        cells_in(r, grid_.dx(), "ergodic radius");
    }
    if (!functionals_.empty() &&
        (ergodic_checkpoint_ < 0 || static_cast<std::size_t>(ergodic_checkpoint_) >= nc)) {
        throw ConfigError("ergodic checkpoint out of range");
    }
    for (const auto& f : functionals_) {
        if (f.weights.size() != f.shifts.size() || f.weights.empty()) {
            throw ConfigError("ergodic functional '" + f.name + "': weights and shifts must match");
        }
        for (double z : f.shifts) cells_in(z, grid_.dx(), "ergodic shift");
    }
    fluct_offset_ = 3 * nc;
    lag_offset_ = fluct_offset_ + nc * radii_.size();
    std::size_t pos = lag_offset_;
    for (const auto& [a, b] : pairs_) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= nc || static_cast<std::size_t>(b) >= nc) {
            throw ConfigError("covariance pair refers to a missing checkpoint");
        }
        const double tmax = std::max(grid_.checkpoints[static_cast<std::size_t>(a)],
                                     grid_.checkpoints[static_cast<std::size_t>(b)]);
        const int lag = std::min(static_cast<int>(std::ceil(6.0 * std::sqrt(tmax) / grid_.dx())),
                                 grid_.cells / 2 - 1);
        max_lags_.push_back(lag);
        pair_offsets_.push_back(pos);
        pos += static_cast<std::size_t>(2 * lag + 1);
    }
    ergodic_offset_ = pos;
    size_ = ergodic_offset_ + functionals_.size() * ergodic_radii_.size();
}

std::size_t RecordLayout::moment(std::size_t c, int power) const {
    const std::size_t k = power == 1 ? 0 : power == 2 ? 1 : power == 4 ? 2 : 3;
    if (k == 3) throw DomainError("RecordLayout::moment: power must be 1, 2 or 4");
    return 3 * c + k;
}

std::size_t RecordLayout::fluctuation(std::size_t c, std::size_t r) const {
    return fluct_offset_ + c * radii_.size() + r;
}

std::size_t RecordLayout::lag(std::size_t p, int l) const {
    return pair_offsets_[p] + static_cast<std::size_t>(l + max_lags_[p]);
}

std::size_t RecordLayout::ergodic(std::size_t f, std::size_t r) const {
    return ergodic_offset_ + f * ergodic_radii_.size() + r;
}

std::size_t RecordLayout::radius_index(double radius) const {
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        if (std::abs(radii_[i] - radius) <= kTol) return i;
    }
    throw DomainError("radius " + std::to_string(radius) + " is not in the record layout");
}

std::size_t RecordLayout::checkpoint_index(double t) const {
    for (std::size_t i = 0; i < grid_.checkpoints.size(); ++i) {
        if (std::abs(grid_.checkpoints[i] - t) <= kTol) return i;
    }
    throw DomainError("time " + std::to_string(t) + " is not a checkpoint");
}

std::size_t RecordLayout::pair_index(int a, int b) const {
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (pairs_[i].first == a && pairs_[i].second == b) return i;
    }
    throw DomainError("covariance pair is not in the record layout");
}

std::vector<double> make_record(const RecordLayout& layout, const Snapshots& snaps,
                                std::span<const double> mean) {
    const auto& grid = layout.grid();
    const auto nc = grid.checkpoints.size();
    if (snaps.size() != nc || mean.size() != nc) {
        throw DomainError("make_record: snapshots and mean curve must cover every checkpoint");
    }
    const int n = grid.cells;
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> rec(layout.size(), 0.0);
    std::vector<std::vector<double>> centred(nc, std::vector<double>(nn));
    for (std::size_t c = 0; c < nc; ++c) {
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            const double d = snaps[c].values[i] - mean[c];
            centred[c][i] = d;
            s1 += d;
            s2 += d * d;
            s4 += d * d * d * d;
        }
        rec[layout.moment(c, 1)] = s1 / n;
        rec[layout.moment(c, 2)] = s2 / n;
        rec[layout.moment(c, 4)] = s4 / n;
        for (std::size_t r = 0; r < layout.radii().size(); ++r) {
            rec[layout.fluctuation(c, r)] =
                spatial_average(grid, snaps[c].values, layout.radii()[r], mean[c]);
        }
    }
    for (std::size_t p = 0; p < layout.pairs().size(); ++p) {
        const auto& a = centred[static_cast<std::size_t>(layout.pairs()[p].first)];
        const auto& b = centred[static_cast<std::size_t>(layout.pairs()[p].second)];
        const int lmax = layout.max_lag(p);
        for (int l = -lmax; l <= lmax; ++l) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                const int j = ((i + l) % n + n) % n;
                s += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
            }
            rec[layout.lag(p, l)] = s / n;
        }
    }
    if (!layout.functionals().empty()) {
        const auto& u = snaps[static_cast<std::size_t>(layout.ergodic_checkpoint())].values;
        const double dx = grid.dx();
        std::vector<double> g(nn);
        for (std::size_t f = 0; f < layout.functionals().size(); ++f) {
            const auto& fn = layout.functionals()[f];
            for (int i = 0; i < n; ++i) {
                double arg = 0.0;
                for (std::size_t j = 0; j < fn.weights.size(); ++j) {
                    const int shift = static_cast<int>(std::lround(fn.shifts[j] / dx));
                    arg += fn.weights[j] * u[static_cast<std::size_t>(((i + shift) % n + n) % n)];
                }
                g[static_cast<std::size_t>(i)] = fn.use_sin ? std::sin(arg) : std::cos(arg);
            }
            // Cells with centre in [0, R] start at index n/2.
            for (std::size_t r = 0; r < layout.ergodic_radii().size(); ++r) {
                const int count = static_cast<int>(std::lround(layout.ergodic_radii()[r] / dx));
                double s = 0.0;
                for (int i = 0; i < count; ++i) s += g[static_cast<std::size_t>(n / 2 + i)];
                rec[layout.ergodic(f, r)] = count > 0 ? s / count : 0.0;
            }
        }
    }
    return rec;
}

CovarianceProfile covariance_profile(const Ensemble& ens, double t, double s) {
    CovarianceProfile prof;
    prof.t = t;
    prof.s = s;
    const auto& layout = ens.layout;
    const double dx = layout.grid().dx();
    if (t == 0.0 || s == 0.0) {
        // u(0, .) = 1 is deterministic.
        const int lmax = static_cast<int>(std::ceil(6.0 * std::sqrt(std::max(t, s)) / dx));
        for (int l = -lmax; l <= lmax; ++l) {
            prof.lags.push_back(l * dx);
            prof.rho.push_back(0.0);
            prof.rho_error.push_back(0.0);
        }
        return prof;
    }
    require_rows(ens, 30, "covariance_profile");
    const auto a = static_cast<int>(layout.checkpoint_index(t));
    const auto b = static_cast<int>(layout.checkpoint_index(s));
    const std::size_t p = layout.pair_index(a, b);
    const int lmax = layout.max_lag(p);
    for (int l = -lmax; l <= lmax; ++l) {
        const auto e = column_mean(ens, layout.lag(p, l));
        prof.lags.push_back(l * dx);
        prof.rho.push_back(e.value);
        prof.rho_error.push_back(e.error);
    }
    std::vector<double> per_row;
    per_row.reserve(ens.size());
    for (const auto& row : ens.rows) {
        double sum = 0.0;
        for (int l = -lmax; l <= lmax; ++l) sum += row[layout.lag(p, l)];
        per_row.push_back(2.0 * dx * sum);
    }
    const auto sig = mean_of(per_row);
    prof.sigma = sig.value;
    prof.sigma_error = sig.error;
    return prof;
}

VarianceScalingReport variance_scaling_report(const Ensemble& ens, double t,
                                              const std::vector<double>& radii) {
    require_rows(ens, 30, "variance_scaling_report");
    if (radii.size() < 4) throw ConfigError("variance_scaling_report: needs at least four radii");
    const auto& layout = ens.layout;
    const std::size_t c = layout.checkpoint_index(t);
    const auto ci = static_cast<int>(c);
    const double dx = layout.grid().dx();
    const std::size_t p = layout.pair_index(ci, ci);
    const int lmax = layout.max_lag(p);

    VarianceScalingReport rep;
    rep.t = t;
    const auto prof = covariance_profile(ens, t, t);
    rep.sigma = {prof.sigma, prof.sigma_error};

    std::vector<std::size_t> cols;
    for (double r : radii) cols.push_back(layout.fluctuation(c, layout.radius_index(r)));
    for (std::size_t k = 0; k < radii.size(); ++k) {
        VarianceScalingRow row;
        row.radius = radii[k];
        std::vector<double> sq, f, pred;
        const int cells = static_cast<int>(std::lround(2.0 * radii[k] / dx));
        for (const auto& r : ens.rows) {
            const double v = r[cols[k]];
            f.push_back(v);
            sq.push_back(v * v);
            double s = 0.0;
            for (int l = -std::min(lmax, cells); l <= std::min(lmax, cells); ++l) {
                s += r[layout.lag(p, l)] * (cells - std::abs(l));
            }
            pred.push_back(dx * dx * s);
        }
        row.sigma2 = mean_of(sq);
        row.mean = mean_of(f);
        const auto pe = mean_of(pred);
        row.predicted = pe.value;
        row.predicted_error = pe.error;
        rep.rows.push_back(row);
    }

    std::vector<std::vector<double>> sq_rows;
    sq_rows.reserve(ens.size());
    for (const auto& r : ens.rows) {
        std::vector<double> v;
        for (auto col : cols) v.push_back(r[col] * r[col]);
        sq_rows.push_back(std::move(v));
    }
    rep.slope = stats::jackknife_means(sq_rows, [&](std::span<const double> means) {
        return stats::ols_slope(radii, means).value;
    });
    return rep;
}

NormalityReport normality_report(std::span<const double> samples) {
    if (samples.size() < 500) {
        throw StatisticsError("normality_report: needs at least 500 samples, got " +
                              std::to_string(samples.size()));
    }
    stats::StatsAccumulator acc;
    for (double v : samples) acc.add(v);
    if (!(acc.variance() > 0.0)) throw StatisticsError("normality_report: zero variance");

    NormalityReport rep;
    rep.n = samples.size();
    rep.ks = stats::ks_normal(std::vector<double>(samples.begin(), samples.end()));
    rep.ks_band = stats::ks_band(rep.n);
    rep.ks_sd = stats::ks_null_sd(rep.n);
    rep.tv_proxy = stats::tv_proxy_normal(samples, 32);

    std::vector<std::vector<double>> powers;
    powers.reserve(samples.size());
    for (double v : samples) powers.push_back({v, v * v, v * v * v, v * v * v * v});
    const auto central = [](std::span<const double> m, double& m2, double& m3, double& m4) {
        const double mu = m[0];
        m2 = m[1] - mu * mu;
        m3 = m[2] - 3.0 * mu * m[1] + 2.0 * mu * mu * mu;
        m4 = m[3] - 4.0 * mu * m[2] + 6.0 * mu * mu * m[1] - 3.0 * mu * mu * mu * mu;
    };
    rep.skewness = stats::jackknife_means(powers, [&](std::span<const double> m) {
        double m2, m3, m4;
        central(m, m2, m3, m4);
        return m3 / std::pow(m2, 1.5);
    });
    rep.excess_kurtosis = stats::jackknife_means(powers, [&](std::span<const double> m) {
        double m2, m3, m4;
        central(m, m2, m3, m4);
        return m4 / (m2 * m2) - 3.0;
    });
    return rep;
}

std::vector<double> normalized_fluctuations(const Ensemble& ens, double t, double radius) {
    const auto& layout = ens.layout;
    const std::size_t col =
        layout.fluctuation(layout.checkpoint_index(t), layout.radius_index(radius));
    double s2 = 0.0;
    for (const auto& r : ens.rows) s2 += r[col] * r[col];
    if (ens.rows.empty() || !(s2 > 0.0)) {
        throw StatisticsError("normalized_fluctuations: zero variance");
    }
    const double sd = std::sqrt(s2 / static_cast<double>(ens.size()));
    std::vector<double> out;
    out.reserve(ens.size());
    for (const auto& r : ens.rows) out.push_back(r[col] / sd);
    return out;
}

ErgodicityReport ergodicity_report(const Ensemble& ens, const std::string& functional) {
    require_rows(ens, 2, "ergodicity_report");
    const auto& layout = ens.layout;
    std::size_t f = layout.functionals().size();
    for (std::size_t i = 0; i < layout.functionals().size(); ++i) {
        if (layout.functionals()[i].name == functional) f = i;
    }
    if (f == layout.functionals().size()) {
        throw DomainError("ergodicity_report: unknown functional '" + functional + "'");
    }
    ErgodicityReport rep;
    rep.functional = functional;
    rep.t = layout.times()[static_cast<std::size_t>(layout.ergodic_checkpoint())];
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t r = 0; r < layout.ergodic_radii().size(); ++r) {
        ErgodicityRow row;
        row.radius = layout.ergodic_radii()[r];
        std::vector<std::vector<double>> cols;
        cols.reserve(ens.size());
        for (const auto& rec : ens.rows) {
            const double v = rec[layout.ergodic(f, r)];
            cols.push_back({v, v * v});
        }
        const double n = static_cast<double>(ens.size());
        row.variance = stats::jackknife_means(cols, [n](std::span<const double> m) {
            return std::max(0.0, m[1] - m[0] * m[0]) * n / (n - 1.0);
        });
        row.scaled = row.radius * row.variance.value;
        row.scaled_error = row.radius * row.variance.error;
        lo = std::min(lo, row.scaled);
        hi = std::max(hi, row.scaled);
        rep.rows.push_back(row);
    }
    rep.band_ratio = hi == 0.0 ? 1.0 : (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    return rep;
}

FcltReport fclt_report(const Ensemble& ens, const std::vector<double>& times, double radius,
                       const std::vector<double>& gammas) {
    require_rows(ens, 30, "fclt_report");
    const auto& layout = ens.layout;
    const std::size_t r = layout.radius_index(radius);
    const std::size_t k = times.size();
    FcltReport rep;
    rep.radius = radius;
    rep.times = times;
    std::vector<std::size_t> cols;
    for (double t : times) cols.push_back(layout.fluctuation(layout.checkpoint_index(t), r));
    rep.covariance.assign(k, std::vector<double>(k, 0.0));
    rep.covariance_error.assign(k, std::vector<double>(k, 0.0));
    rep.sigma.assign(k, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> prod;
            prod.reserve(ens.size());
            for (const auto& rec : ens.rows) prod.push_back(rec[cols[i]] * rec[cols[j]] / radius);
            const auto e = mean_of(prod);
            rep.covariance[i][j] = e.value;
            rep.covariance_error[i][j] = e.error;
            const int a = static_cast<int>(layout.checkpoint_index(times[i]));
            const int b = static_cast<int>(layout.checkpoint_index(times[j]));
            for (const auto& [pa, pb] : {std::pair{a, b}, std::pair{b, a}}) {
                bool present = false;
                for (const auto& q : layout.pairs()) present = present || (q.first == pa && q.second == pb);
                if (present && std::isnan(rep.sigma[i][j])) {
                    rep.sigma[i][j] = covariance_profile(ens, layout.times()[static_cast<std::size_t>(pa)],
                                                         layout.times()[static_cast<std::size_t>(pb)])
                                          .sigma;
                }
            }
        }
    }

    // Holder quotients over the whole checkpoint path (with F(0) = 0).
    const auto& all = layout.times();
    const double scale = 1.0 / std::sqrt(radius);
    for (double gamma : gammas) {
        for (int stride : {1, 2}) {
            std::vector<double> path_t{0.0};
            std::vector<std::size_t> path_c;
            for (std::size_t c = static_cast<std::size_t>(stride - 1); c < all.size();
                 c += static_cast<std::size_t>(stride)) {
                path_t.push_back(all[c]);
                path_c.push_back(layout.fluctuation(c, r));
            }
            std::vector<double> q;
            q.reserve(ens.size());
            for (const auto& rec : ens.rows) {
                std::vector<double> f{0.0};
                for (auto col : path_c) f.push_back(rec[col] * scale);
                double best = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i) {
                    for (std::size_t j = i + 1; j < f.size(); ++j) {
                        best = std::max(best, std::abs(f[j] - f[i]) /
                                                  std::pow(path_t[j] - path_t[i], gamma));
                    }
                }
                q.push_back(best);
            }
            HolderStat h;
            h.gamma = gamma;
            h.stride = stride;
            h.median = stats::quantile(q, 0.5);
            h.q95 = stats::quantile(q, 0.95);
            h.max = *std::max_element(q.begin(), q.end());
            rep.holder.push_back(h);
        }
    }
    return rep;
}

double additive_rho(double t, double s, double z) {
    if (!(t >= 0.0 && s >= 0.0)) throw DomainError("additive_rho: times must be non-negative");
    const auto primitive = [az = std::abs(z)](double tau) {
        if (tau <= 0.0) return 0.0;
        return std::sqrt(tau / std::numbers::pi) * std::exp(-az * az / (4.0 * tau)) -
               0.5 * az * std::erfc(az / (2.0 * std::sqrt(tau)));
    };
    return primitive(0.5 * (t + s)) - primitive(0.5 * std::abs(t - s));
}

double additive_variance_oracle(double t, double radius) {
    if (!(t > 0.0) || !(radius > 0.0)) {
        throw DomainError("additive_variance_oracle: requires t > 0 and R > 0");
    }
    // The r-integral is (1 - e^{-t xi^2}) / xi^2; over xi in R the integrand is even.
    const auto f = [t, radius](double xi) {
        if (xi == 0.0) return radius * radius * t;
        const double sinc = std::sin(radius * xi) / xi;
        return sinc * sinc * (-std::expm1(-t * xi * xi)) / (xi * xi);
    };
    const double cutoff = std::max(50.0, std::sqrt(60.0 / t));
    const int panels = std::max(64, static_cast<int>(std::ceil(2.0 * radius * cutoff / std::numbers::pi)));
    quad::Tolerance tol;
    tol.relative = 1e-12;
    tol.absolute = 1e-14 * radius * radius * t * cutoff / panels;
    const double body = quad::value_or_throw(quad::adaptive_simpson_panels(f, 0.0, cutoff, panels, tol),
                                             "additive_variance_oracle");
    // Tail beyond the cutoff, where e^{-t xi^2} < e^{-60}: int sin^2(R xi) / xi^4.
    const double x = cutoff, w = 2.0 * radius;
    const double cos_tail = -std::sin(w * x) / (w * std::pow(x, 4)) -
                            4.0 * std::cos(w * x) / (w * w * std::pow(x, 5));
    const double tail = 1.0 / (6.0 * x * x * x) - 0.5 * cos_tail;
    return 4.0 / std::numbers::pi * (body + tail);
}

double additive_variance_finite_r(double t, double radius) {
    if (!(t > 0.0) || !(radius > 0.0)) {
        throw DomainError("additive_variance_finite_r: requires t > 0 and R > 0");
    }
    // rho(z) = int_0^t G_{2u}(z) du; with u = v^2 the integrand is pi^{-1/2} e^{-z^2 / (4 v^2)}.
    const auto rho = [t](double z) {
        const auto g = [z](double v) {
            if (v == 0.0) return z == 0.0 ? 1.0 / std::sqrt(std::numbers::pi) : 0.0;
            return std::exp(-z * z / (4.0 * v * v)) / std::sqrt(std::numbers::pi);
        };
        quad::Tolerance tol;
        tol.relative = 1e-13;
        tol.absolute = 1e-18;
        return quad::value_or_throw(quad::adaptive_simpson(g, 0.0, std::sqrt(t), tol),
                                    "additive_variance_finite_r");
    };
    const double upper = std::min(2.0 * radius, 14.0 * std::sqrt(t));
    const auto f = [&](double z) { return rho(z) * (2.0 * radius - z); };
    quad::Tolerance tol;
    tol.relative = 1e-12;
    tol.absolute = 1e-15 * radius * std::sqrt(t);
    return 2.0 * quad::value_or_throw(quad::adaptive_simpson_panels(f, 0.0, upper, 32, tol),
                                      "additive_variance_finite_r");
}

}  // namespace shelab
