#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shelab/grid.hpp"
#include "shelab/solver.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// F_R = sum over cells with |x_i| <= R of (u_i - mean) dx. ConfigError if R exceeds the safe
/// region L - 6 sqrt(T) of the grid.
double spatial_average(const GridSpec& grid, std::span<const double> values, double radius,
                       double mean);

/// Test functional g(sum_j b_j u(t, x + zeta_j)) with g = cos or sin.
struct ErgodicFunctional {
    std::string name;
    bool use_sin = false;
    std::vector<double> weights;  // b_j
    std::vector<double> shifts;   // zeta_j, multiples of dx
};

/// Which per-replicate summaries are kept and where they sit in the flat record.
class RecordLayout {
public:
    RecordLayout() = default;
    /// `pairs` index into grid.checkpoints; lags run to ceil(6 sqrt(max(t, s)) / dx) cells.
    /// Ergodic averages are taken at checkpoint `ergodic_checkpoint` over [0, R].
    RecordLayout(const GridSpec& grid, std::vector<double> radii,
                 std::vector<std::pair<int, int>> pairs, std::vector<ErgodicFunctional> functionals,
                 std::vector<double> ergodic_radii, int ergodic_checkpoint);

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& times() const { return grid_.checkpoints; }
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
    const std::vector<ErgodicFunctional>& functionals() const { return functionals_; }
    const std::vector<double>& ergodic_radii() const { return ergodic_radii_; }
    int ergodic_checkpoint() const { return ergodic_checkpoint_; }
    int max_lag(std::size_t pair) const { return max_lags_[pair]; }

    std::size_t size() const { return size_; }
    /// Spatial mean of (u - m)^power, power in {1, 2, 4}.
    std::size_t moment(std::size_t checkpoint, int power) const;
    std::size_t fluctuation(std::size_t checkpoint, std::size_t radius) const;
    std::size_t lag(std::size_t pair, int lag) const;
    std::size_t ergodic(std::size_t functional, std::size_t radius) const;

    /// Index of `radius` in radii(), or of the checkpoint at time t; DomainError if absent.
    std::size_t radius_index(double radius) const;
    std::size_t checkpoint_index(double t) const;
    std::size_t pair_index(int a, int b) const;

private:
    GridSpec grid_;
    std::vector<double> radii_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<ErgodicFunctional> functionals_;
    std::vector<double> ergodic_radii_;
    int ergodic_checkpoint_ = 0;
    std::vector<int> max_lags_;
    std::size_t fluct_offset_ = 0, lag_offset_ = 0, ergodic_offset_ = 0, size_ = 0;
    std::vector<std::size_t> pair_offsets_;
};

/// Per-replicate summary of one run; `mean` holds the pilot mean m(t) per checkpoint.
std::vector<double> make_record(const RecordLayout& layout, const Snapshots& snapshots,
                                std::span<const double> mean);

/// Replicate records in replicate order.
struct Ensemble {
    RecordLayout layout;
    std::vector<std::vector<double>> rows;
    std::size_t size() const { return rows.size(); }
};

struct CovarianceProfile {
    double t = 0.0, s = 0.0;
    std::vector<double> lags;  // in space units
    std::vector<double> rho;
    std::vector<double> rho_error;
    double sigma = 0.0;        // 2 sum_lag rho dx over |lag| <= 6 sqrt(max(t, s))
    double sigma_error = 0.0;
};

/// Cross-replicate covariance at each lag, averaged over base points. StatisticsError with
/// fewer than 30 replicates.
CovarianceProfile covariance_profile(const Ensemble& ens, double t, double s);

struct VarianceScalingRow {
    double radius = 0.0;
    stats::Estimate sigma2;       // E F_R^2 (F centred by the pilot mean)
    stats::Estimate mean;         // E F_R, should vanish
    double predicted = 0.0;       // finite-R value from the estimated rho
    double predicted_error = 0.0;
};

struct VarianceScalingReport {
    double t = 0.0;
    std::vector<VarianceScalingRow> rows;
    stats::Estimate slope;        // OLS slope of sigma_R^2 against R, jackknife error
    stats::Estimate sigma;        // Sigma_{t,t} from covariance_profile
};

/// Requires at least four radii present in the layout.
VarianceScalingReport variance_scaling_report(const Ensemble& ens, double t,
                                              const std::vector<double>& radii);

struct NormalityReport {
    std::size_t n = 0;
    double ks = 0.0;
    double ks_band = 0.0;         // 1.358 / sqrt(n)
    double ks_sd = 0.0;           // null standard deviation of the KS distance
    stats::Estimate skewness;
    stats::Estimate excess_kurtosis;
    double tv_proxy = 0.0;        // 32 equiprobable bins
};

/// `samples` are F_R / sigma_R. Requires at least 500; zero variance is a StatisticsError.
NormalityReport normality_report(std::span<const double> samples);

/// F_R(t) / sqrt(E F_R(t)^2) for every replicate.
std::vector<double> normalized_fluctuations(const Ensemble& ens, double t, double radius);

struct ErgodicityRow {
    double radius = 0.0;
    stats::Estimate variance;     // Var of (1/R) int_0^R g
    double scaled = 0.0;          // R Var
    double scaled_error = 0.0;
};

struct ErgodicityReport {
    std::string functional;
    double t = 0.0;
    std::vector<ErgodicityRow> rows;
    double band_ratio = 0.0;      // max / min of R Var
};

ErgodicityReport ergodicity_report(const Ensemble& ens, const std::string& functional);

struct HolderStat {
    double gamma = 0.0;
    int stride = 1;               // uses every stride-th checkpoint
    double median = 0.0;
    double q95 = 0.0;
    double max = 0.0;
};

struct FcltReport {
    double radius = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> covariance;       // Cov(F(t_i)/sqrt R, F(t_j)/sqrt R)
    std::vector<std::vector<double>> covariance_error;
    std::vector<std::vector<double>> sigma;            // Sigma_{t_i,t_j}, when the pair is laid out
    std::vector<HolderStat> holder;
};

/// `times` must be checkpoints (at least three for the Holder statistics to be meaningful).
/// Holder quotients max_{i<j} |F(t_i) - F(t_j)| / sqrt(R) / |t_i - t_j|^gamma are reported over
/// all checkpoints (stride 1) and every other checkpoint (stride 2).
FcltReport fclt_report(const Ensemble& ens, const std::vector<double>& times, double radius,
                       const std::vector<double>& gammas = {0.25, 0.4});

/// rho_{t,s}(z) of the additive solution: int_0^{t^s} G_{t+s-2r}(z) dr in closed form.
double additive_rho(double t, double s, double z);

/// sigma_R^2(t) of the additive solution by the Fourier integral
/// (2/pi) int int_0^t e^{-(t-r) xi^2} sin^2(R xi) / xi^2 dr dxi.
double additive_variance_oracle(double t, double radius);

/// The same quantity as int_{|z| <= 2R} rho_{t,t}(z) (2R - |z|) dz, with rho by quadrature in r.
double additive_variance_finite_r(double t, double radius);

}  // namespace shelab
