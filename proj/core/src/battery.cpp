#include "shelab/battery.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "shelab/bounds.hpp"
#include "shelab/ensemble.hpp"
#include "shelab/error.hpp"
#include "shelab/malliavin.hpp"
#include "shelab/solver.hpp"
#include "shelab/spectral.hpp"
#include "shelab/stats.hpp"

namespace shelab::battery {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

CheckRecord record(std::string name, double value, double error, double threshold, bool passed,
                   std::string detail = {}, bool informational = false) {
    CheckRecord c;
    c.name = std::move(name);
    c.value = value;
    c.error = error;
    c.threshold = threshold;
    c.passed = passed;
    c.informational = informational;
    c.detail = std::move(detail);
    return c;
}

CheckRecord info(std::string name, double value, double error = 0.0, std::string detail = {}) {
    return record(std::move(name), value, error, 0.0, true, std::move(detail), true);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string tag(const char* key, double v) { return std::string("[") + key + "=" + fmt(v) + "]"; }

// File-name friendly variant for plot names.
std::string ftag(const char* key, double v) { return std::string("_") + key + fmt(v); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string plot_text(const PlotData& p) {
    std::string out = "# " + p.x_label + " " + p.y_label + "\n";
    for (const auto& [x, y] : p.points) out += g17(x) + " " + g17(y) + "\n";
    return out;
}

}  // namespace

Output kernel_check(const kernel::SuiteOptions& options) {
    Output out;
    out.command = "kernel-check";
    const auto start = Clock::now();
    out.checks = kernel::run_kernel_suite(options);
    const double secs = seconds_since(start);
    out.checks.push_back(record("kernel_suite_seconds", secs, 0.0, kKernelSeconds, secs < kKernelSeconds));
    return out;
}

Output appendix_check() {
    Output out;
    out.command = "appendix-check";
    const auto start = Clock::now();
    out.checks = bounds::run_appendix_suite();
    const double secs = seconds_since(start);
    out.checks.push_back(
        record("appendix_suite_seconds", secs, 0.0, kAppendixSeconds, secs < kAppendixSeconds));
    return out;
}

void variance_checks(const RunConfig& config, const Ensemble& ens, Output& out) {
    const auto& layout = ens.layout;
    const auto& times = layout.times();
    const bool additive = config.coefficients.build().is_additive();
    PlotData var_plot{"variance_vs_t", "t", "var_u", {}};
    for (std::size_t c = 0; c < times.size(); ++c) {
        stats::StatsAccumulator acc;
        for (const auto& row : ens.rows) acc.add(row[layout.moment(c, 2)]);
        var_plot.points.emplace_back(times[c], acc.mean());
    }
    out.plots.push_back(var_plot);

    const std::size_t c = times.size() - 1;
    const double t = times[c];
    stats::StatsAccumulator var_acc, mean_acc;
    for (const auto& row : ens.rows) {
        var_acc.add(row[layout.moment(c, 2)]);
        mean_acc.add(row[layout.moment(c, 1)]);
    }
    const double n = static_cast<double>(var_acc.count());
    const double est = var_acc.mean();
    const double se = std::sqrt(var_acc.variance() / n);
    out.checks.push_back(info("centred_mean" + tag("t", t), mean_acc.mean(),
                              std::sqrt(mean_acc.variance() / n), "E(u - m), m from the pilot"));
    if (!additive) {
        out.checks.push_back(info("pointwise_variance" + tag("t", t), est, se));
        return;
    }
    const double target = std::sqrt(t / std::numbers::pi);
    const double periodic = exact_additive_covariance(config.grid.half_width, t, 0.0);
    const double model = config.sampler == Sampler::spectral
                             ? periodic
                             : lattice_additive_covariance(config.grid, t, 0);
    const double disc = std::abs(model - target);
    const double combined = std::sqrt(se * se + disc * disc);
    out.checks.push_back(record("pointwise_variance" + tag("t", t), est, combined,
                                target, std::abs(est - target) <= kVarianceSigmas * combined,
                                "target sqrt(t/pi); |est - target| <= 3 sqrt(se^2 + disc^2), se " +
                                    fmt(se) + ", disc " + fmt(disc)));
    out.checks.push_back(info("pointwise_variance_z" + tag("t", t), (est - target) / combined));
    out.checks.push_back(info("lattice_variance_bias" + tag("t", t), model - target));
}

void clt_checks(const RunConfig& config, const Ensemble& ens, double t, double radius, Output& out) {
    const auto& layout = ens.layout;
    const bool additive = config.coefficients.build().is_additive();
    const auto& radii = layout.radii();
    (void)layout.radius_index(radius);

    if (radii.size() >= 4) {
        const auto rep = variance_scaling_report(ens, t, radii);
        PlotData s2{"sigma2_vs_R" + ftag("t", t), "R", "sigma2", {}};
        PlotData pred{"sigma2_predicted_vs_R" + ftag("t", t), "R", "sigma2", {}};
        for (const auto& row : rep.rows) {
            s2.points.emplace_back(row.radius, row.sigma2.value);
            pred.points.emplace_back(row.radius, row.predicted);
            out.checks.push_back(info("sigma2" + tag("t", t) + tag("R", row.radius), row.sigma2.value,
                                      row.sigma2.error, "finite-R prediction " + fmt(row.predicted)));
        }
        out.plots.push_back(s2);
        out.plots.push_back(pred);
        out.checks.push_back(info("Sigma" + tag("t", t), rep.sigma.value, rep.sigma.error,
                                  "integral of the estimated covariance"));
        if (additive) {
            const double target = 2.0 * t;
            const double rel = std::abs(rep.slope.value - target) / target;
            out.checks.push_back(record("variance_slope" + tag("t", t), rep.slope.value, rep.slope.error,
                                        target, rel <= kSlopeTolerance,
                                        "OLS slope of sigma_R^2 on R, relative deviation " + fmt(rel)));
            double worst = 0.0;
            PlotData oracle{"sigma2_oracle_vs_R" + ftag("t", t), "R", "sigma2", {}};
            for (const auto& row : rep.rows) {
                const double a = additive_variance_oracle(t, row.radius);
                const double b = additive_variance_finite_r(t, row.radius);
                worst = std::max(worst, std::abs(a - b) / std::abs(b));
                oracle.points.emplace_back(row.radius, a);
                out.checks.push_back(info("sigma2_z" + tag("t", t) + tag("R", row.radius),
                                          (row.sigma2.value - a) / row.sigma2.error,
                                          0.0, "against the Fourier value " + fmt(a)));
            }
            out.plots.push_back(oracle);
            out.checks.push_back(record("variance_oracle_agreement" + tag("t", t), worst, 0.0,
                                        kOracleTolerance, worst <= kOracleTolerance,
                                        "Fourier integral vs finite-R formula, max relative"));
        } else {
            const double target = 2.0 * rep.sigma.value;
            out.checks.push_back(info("variance_slope" + tag("t", t), rep.slope.value, rep.slope.error,
                                      "2 Sigma = " + fmt(target)));
        }
    }

    PlotData ks_plot{"ks_vs_R" + ftag("t", t), "R", "ks", {}};
    NormalityReport at_radius, at_two;
    bool have_two = false;
    for (double r : radii) {
        const auto samples = normalized_fluctuations(ens, t, r);
        const auto rep = normality_report(samples);
        ks_plot.points.emplace_back(r, rep.ks);
        out.checks.push_back(info("ks" + tag("t", t) + tag("R", r), rep.ks, rep.ks_sd,
                                  "band " + fmt(rep.ks_band)));
        out.checks.push_back(info("excess_kurtosis" + tag("t", t) + tag("R", r),
                                  rep.excess_kurtosis.value, rep.excess_kurtosis.error));
        out.checks.push_back(info("skewness" + tag("t", t) + tag("R", r), rep.skewness.value,
                                  rep.skewness.error));
        out.checks.push_back(info("tv_proxy" + tag("t", t) + tag("R", r), rep.tv_proxy));
        if (r == radius) {
            at_radius = rep;
            PlotData qq{"qq" + ftag("t", t) + ftag("R", r), "normal_quantile", "sample_quantile", {}};
            auto sorted = samples;
            std::sort(sorted.begin(), sorted.end());
            const double n = static_cast<double>(sorted.size());
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                qq.points.emplace_back(stats::normal_quantile((static_cast<double>(i) + 0.5) / n), sorted[i]);
            }
            out.plots.push_back(qq);
        }
        if (r == 2.0) {
            at_two = rep;
            have_two = true;
        }
    }
    out.plots.push_back(ks_plot);

    out.checks.push_back(record("ks_within_band" + tag("t", t) + tag("R", radius), at_radius.ks,
                                at_radius.ks_sd, at_radius.ks_band, at_radius.ks <= at_radius.ks_band,
                                "n = " + std::to_string(at_radius.n) + ", band 1.358/sqrt(n)"));
    if (!additive) {
        const double k = std::abs(at_radius.excess_kurtosis.value);
        out.checks.push_back(record("abs_excess_kurtosis" + tag("t", t) + tag("R", radius), k,
                                    at_radius.excess_kurtosis.error, kKurtosisTolerance,
                                    k <= kKurtosisTolerance));
    }
    if (have_two && radius != 2.0) {
        const double joint = std::sqrt(at_radius.ks_sd * at_radius.ks_sd + at_two.ks_sd * at_two.ks_sd);
        const double bound = at_two.ks + kMonotoneSigmas * joint;
        out.checks.push_back(record("ks_non_increasing" + tag("t", t) + tag("R", radius), at_radius.ks,
                                    joint, bound, at_radius.ks <= bound,
                                    "KS(R) <= KS(2) + 2 joint SE, KS(2) = " + fmt(at_two.ks),
                                    additive));
    }
}

void fclt_checks(const RunConfig& config, const Ensemble& ens, double radius, Output& out) {
    const bool additive = config.coefficients.build().is_additive();
    const auto rep = fclt_report(ens, config.fclt_times, radius, {0.25, kHolderGamma});
    const std::size_t k = rep.times.size();
    double worst = 0.0;
    PlotData cov_plot{"fclt_covariance" + ftag("R", radius), "target", "covariance", {}};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            const double target = additive ? 2.0 * std::min(rep.times[i], rep.times[j])
                                           : 2.0 * rep.sigma[i][j];
            if (!std::isfinite(target) || target == 0.0) continue;
            const double rel = std::abs(rep.covariance[i][j] - target) / std::abs(target);
            worst = std::max(worst, rel);
            cov_plot.points.emplace_back(target, rep.covariance[i][j]);
            out.checks.push_back(info("fclt_cov" + tag("t", rep.times[i]) + tag("s", rep.times[j]) +
                                          tag("R", radius),
                                      rep.covariance[i][j], rep.covariance_error[i][j],
                                      "target " + fmt(target)));
        }
    }
    out.plots.push_back(cov_plot);
    out.checks.push_back(record("fclt_covariance_max_relative" + tag("R", radius), worst, 0.0,
                                kFcltTolerance, worst <= kFcltTolerance,
                                additive ? "target 2 min(t, s)" : "target 2 Sigma_{t,s} estimated",
                                !additive));

    double fine = 0.0, coarse = 0.0;
    for (const auto& h : rep.holder) {
        const std::string name = "holder" + tag("gamma", h.gamma) + "[stride=" + std::to_string(h.stride) + "]";
        out.checks.push_back(info(name + "_q95", h.q95, 0.0, "median " + fmt(h.median) + ", max " + fmt(h.max)));
        if (h.gamma == kHolderGamma) (h.stride == 1 ? fine : coarse) = h.q95;
    }
    const double ratio = fine / coarse;
    out.checks.push_back(record("holder_refinement_ratio" + tag("gamma", kHolderGamma) + tag("R", radius),
                                ratio, 0.0, kHolderRefinementRatio, ratio <= kHolderRefinementRatio,
                                "q95 over all checkpoints / q95 over every other checkpoint"));
}

void ergodicity_checks(const RunConfig& config, const Ensemble& ens, Output& out) {
    (void)config;
    for (const auto& f : ens.layout.functionals()) {
        const auto rep = ergodicity_report(ens, f.name);
        PlotData plot{"ergodic_" + f.name, "R", "R_var", {}};
        for (const auto& row : rep.rows) {
            plot.points.emplace_back(row.radius, row.scaled);
            out.checks.push_back(info("ergodic_R_var[" + f.name + "]" + tag("R", row.radius), row.scaled,
                                      row.scaled_error));
        }
        out.plots.push_back(plot);
        out.checks.push_back(record("ergodic_band_ratio[" + f.name + "]" + tag("t", rep.t), rep.band_ratio,
                                    0.0, kErgodicBand, rep.band_ratio <= kErgodicBand,
                                    "max / min of R Var over R", f.name != "cos_u"));
    }
}

Output malliavin_check(const RunConfig& config) {
    Output out;
    out.command = "malliavin-check";
    out.config_hash = config_hash(config);
    const auto& ms = config.malliavin;
    const GridSpec& grid = ms.grid;
    const CoefficientPair coeffs = config.coefficients.build();
    MalliavinDesign design = default_design(grid);
    design.cell_stride = ms.cell_stride;
    design.integrated_radius = ms.integrated_radius;
    const auto points = build_sample_set(grid, design);
    const std::uint64_t seed = *config.seed;

    std::vector<std::vector<double>> values(ms.replicates);
    parallel_for(values.size(), config.workers, [&](std::size_t r) {
        values[r] = sample_replicate(grid, coeffs, design, points, {seed, r, rng::Stream::analysis});
    });
    const std::vector<std::vector<double>> nested(values.begin(),
                                                  values.begin() + static_cast<long>(ms.nested));

    const bool additive = coeffs.is_additive();
    for (int p : ms.p_orders) {
        const auto full = derivative_bound_report(points, values, p);
        const auto half = derivative_bound_report(points, nested, p);
        const std::string ptag = "[p=" + std::to_string(p) + "]";

        for (const auto& s : full.summaries) {
            const std::string kind = to_string(s.kind);
            PlotData plot{"ratio_" + kind + "_p" + std::to_string(p), "t", "max_ratio", {}};
            std::map<double, double> by_time;
            for (const auto& row : full.rows) {
                if (row.point.kind != s.kind) continue;
                auto [it, fresh] = by_time.emplace(row.point.t, row.ratio);
                if (!fresh) it->second = std::max(it->second, row.ratio);
            }
            plot.points.assign(by_time.begin(), by_time.end());
            out.plots.push_back(plot);
            out.checks.push_back(info("ratio_max[" + kind + "]" + ptag, s.max.value, s.max.error,
                                      std::to_string(s.count) + " points, min " + fmt(s.min) +
                                          ", median " + fmt(s.median) + ", q95 " + fmt(s.q95)));

            if (additive) {
                if (s.kind == SampleKind::first) {
                    const double dev = std::max(std::abs(s.max.value - 1.0), std::abs(1.0 - s.min));
                    out.checks.push_back(record("additive_first_ratio_deviation" + ptag, dev, 0.0,
                                                kAdditiveRatioTolerance, dev <= kAdditiveRatioTolerance,
                                                "max |ratio - 1| over the resolved region"));
                } else {
                    out.checks.push_back(record("additive_" + kind + "_derivative_max" + ptag, s.max.value,
                                                0.0, 0.0, s.max.value == 0.0,
                                                "second derivative vanishes identically"));
                }
                continue;
            }
            out.checks.push_back(record("ratio_finite[" + kind + "]" + ptag, s.finite ? 1.0 : 0.0, 0.0,
                                        1.0, s.finite));
            const auto& h = half.summary(s.kind);
            const double joint = std::sqrt(s.max.error * s.max.error + h.max.error * h.max.error);
            const double diff = std::abs(s.max.value - h.max.value);
            out.checks.push_back(record("ratio_max_stability[" + kind + "]" + ptag, diff, joint,
                                        kStabilitySigmas * joint, diff <= kStabilitySigmas * joint,
                                        "N = " + std::to_string(ms.nested) + ": " + fmt(h.max.value) +
                                            ", N = " + std::to_string(ms.replicates) + ": " +
                                            fmt(s.max.value)));
        }
    }
    return out;
}

std::string statistics_csv(const CheckList& checks) {
    std::string out = "statistic,value,error,threshold,pass\n";
    for (const auto& c : checks) {
        out += csv_field(c.name) + "," + g17(c.value) + "," + g17(c.error) + "," + g17(c.threshold) + "," +
               (c.informational ? "info" : c.passed ? "pass" : "fail") + "\n";
    }
    return out;
}

std::string summary_json(const Output& out) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["command"] = out.command;
    j["config_hash"] = out.config_hash;
    j["passed"] = out.passed();
    if (!out.error.empty()) j["error"] = out.error;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : out.checks) {
        checks.push_back({{"name", c.name},
                          {"value", c.value},
                          {"error", c.error},
                          {"threshold", c.threshold},
                          {"passed", c.passed},
                          {"informational", c.informational},
                          {"detail", c.detail}});
    }
    j["checks"] = checks;
    nlohmann::json plots = nlohmann::json::array();
    for (const auto& p : out.plots) plots.push_back("plots/" + p.name + ".dat");
    j["plots"] = plots;
    return j.dump(2) + "\n";
}

void write_output(const std::filesystem::path& dir, const Output& out) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "statistics.csv", statistics_csv(out.checks));
    write_file_atomic(dir / "summary.json", summary_json(out));
    for (const auto& p : out.plots) write_file_atomic(dir / "plots" / (p.name + ".dat"), plot_text(p));
}

}  // namespace shelab::battery
