#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shelab/coefficients.hpp"
#include "shelab/fluctuation.hpp"
#include "shelab/grid.hpp"

namespace shelab {

struct CoefficientSpec {
    std::string name = "additive";  // additive, linear, smooth-bounded or affine
    double lambda = 0.0;            // linear
    double b0 = 0.0, b1 = 0.0, s0 = 1.0, s1 = 0.0;  // affine

    CoefficientPair build() const;
};

enum class Sampler { euler, spectral };

/// default_grid() with checkpoints every 1/16, so Holder quotients can be refined twice.
GridSpec default_run_grid();

/// L = 8, 256 cells, T = 1, 768 steps (dt/dx^2 = 1/3), checkpoints every 1/8 from 1/4.
GridSpec malliavin_default_grid();

struct MalliavinSettings {
    GridSpec grid = malliavin_default_grid();
    std::size_t replicates = 1000;
    std::size_t nested = 500;      // size of the nested half-ensemble for the stability check
    std::vector<int> p_orders{2, 4};
    int cell_stride = 2;
    double integrated_radius = 4.0;
};

/// Everything that determines a run. `workers`, `out_dir` and `stop_after_batches` do not
/// affect results and are left out of the config hash.
struct RunConfig {
    GridSpec grid = default_run_grid();
    CoefficientSpec coefficients;
    Sampler sampler = Sampler::euler;
    std::size_t replicates = 2000;
    double pilot_fraction = 0.25;
    std::optional<std::uint64_t> seed;
    std::size_t batch_size = 50;
    std::vector<double> radii{2.0, 4.0, 8.0, 16.0};
    std::vector<double> fclt_times{0.25, 0.5, 1.0};
    std::vector<std::pair<double, double>> extra_pairs;  // besides (t, t) and fclt pairs
    std::vector<ErgodicFunctional> functionals;
    std::vector<double> ergodic_radii{2.0, 4.0, 8.0, 16.0};
    double ergodic_time = 1.0;
    std::size_t snapshot_replicates = 0;  // first k replicates also written as snapshot files
    MalliavinSettings malliavin;

    int workers = 1;
    std::filesystem::path out_dir = "shelab-out";
    std::optional<std::size_t> stop_after_batches;

    std::size_t pilot_replicates() const;
    std::size_t batch_count() const;
    /// Throws ConfigError on any violated invariant (grid, radii, seed, pilot fraction).
    void validate() const;
    RecordLayout layout() const;
};

/// Default ergodicity test functionals: cos u, sin u and cos(u(x) + u(x + 1/2) / 2).
std::vector<ErgodicFunctional> default_functionals();

/// Parses the JSON config text; unknown keys are a ConfigError. Missing keys keep defaults,
/// except `seed`, which `validate` requires.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the result-determining fields (sorted keys, fixed number format).
std::string canonical_json(const RunConfig& config);
/// SHA-256 of canonical_json, lowercase hex.
std::string config_hash(const RunConfig& config);

std::string sha256_hex(const std::string& bytes);

}  // namespace shelab
