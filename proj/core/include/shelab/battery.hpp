#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "shelab/check.hpp"
#include "shelab/config.hpp"
#include "shelab/fluctuation.hpp"
#include "shelab/kernel.hpp"

namespace shelab::battery {

/// Two-column plot data written as `plots/<name>.dat`.
struct PlotData {
    std::string name;
    std::string x_label;
    std::string y_label;
    std::vector<std::pair<double, double>> points;
};

/// Result of one command: checks, plot data and, for usage or config failures, the message.
struct Output {
    std::string command;
    std::string config_hash;  // empty for checks that take no config
    CheckList checks;
    std::vector<PlotData> plots;
    std::string error;

    bool passed() const { return error.empty() && all_passed(checks); }
};

// Thresholds shared by the command line and the acceptance run.
inline constexpr double kVarianceSigmas = 3.0;
inline constexpr double kSlopeTolerance = 0.10;
inline constexpr double kOracleTolerance = 1e-6;
inline constexpr double kKurtosisTolerance = 0.25;
inline constexpr double kMonotoneSigmas = 2.0;
inline constexpr double kFcltTolerance = 0.15;
inline constexpr double kHolderGamma = 0.4;
inline constexpr double kHolderRefinementRatio = 1.25;
inline constexpr double kErgodicBand = 3.0;
inline constexpr double kAdditiveRatioTolerance = 0.05;
inline constexpr double kStabilitySigmas = 2.0;
inline constexpr double kKernelSeconds = 10.0;
inline constexpr double kAppendixSeconds = 30.0;

/// Kernel identity and product-bound suite plus its runtime.
Output kernel_check(const kernel::SuiteOptions& options = {});
/// Recursion and Gronwall suite plus its runtime.
Output appendix_check();

/// Var u(t, x) at the last checkpoint against sqrt(t / pi) for additive noise, with the
/// lattice bias of the grid as a second error term. Other coefficients get informational rows.
void variance_checks(const RunConfig& config, const Ensemble& ens, Output& out);
/// Variance scaling in R (slope and, for additive noise, oracle agreement) and normality of
/// F_R(t) / sigma_R(t) at every radius, gated at `radius`.
void clt_checks(const RunConfig& config, const Ensemble& ens, double t, double radius, Output& out);
/// Finite-dimensional covariance on the configured times and Holder quotients under refinement.
void fclt_checks(const RunConfig& config, const Ensemble& ens, double radius, Output& out);
/// R Var of spatial averages for every functional; cos_u is gated on the band.
void ergodicity_checks(const RunConfig& config, const Ensemble& ens, Output& out);
/// Derivative ratios on the Malliavin grid: additive exactness or stability under doubling.
Output malliavin_check(const RunConfig& config);

/// statistics.csv, summary.json and plots/ under `dir`.
void write_output(const std::filesystem::path& dir, const Output& out);

std::string statistics_csv(const CheckList& checks);
std::string summary_json(const Output& out);

}  // namespace shelab::battery
