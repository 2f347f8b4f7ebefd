#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "shelab/config.hpp"
#include "shelab/fluctuation.hpp"
#include "shelab/solver.hpp"

namespace shelab {

/// Runs fn(i) for i in [0, count) on `workers` threads pulling indices from a shared counter.
/// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Flat snapshot file: magic "SHESNAP1", u32 version, u32 nx, u32 count, then per snapshot
/// t followed by nx values, all little-endian float64.
void write_snapshots(const std::filesystem::path& path, const Snapshots& snapshots);
Snapshots read_snapshots(const std::filesystem::path& path);

/// Record matrix file: magic "SHEREC01", u32 version, u64 rows, u64 cols, row-major
/// little-endian float64. Written to a temporary name and renamed into place.
void write_records(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_records(const std::filesystem::path& path);

/// Writes `text` to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

struct ManifestFile {
    std::string path;    // relative to the output directory
    std::string sha256;
};

/// Progress record of an output directory. Only `updated` depends on the clock.
struct RunManifest {
    int schema = 1;
    std::string config_hash;
    std::string version;
    std::size_t replicates = 0;
    std::size_t batch_size = 0;
    bool pilot_done = false;
    std::vector<std::pair<std::size_t, std::size_t>> completed;  // replicate ranges [begin, end)
    std::vector<ManifestFile> files;
    std::string updated;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

struct EnsembleRun {
    Ensemble ensemble;              // analysis records in replicate order (complete runs only)
    std::vector<double> mean_curve; // pilot mean per checkpoint
    RunManifest manifest;
    bool complete = false;
    std::size_t batches_run = 0;    // batches simulated by this call (excludes resumed ones)
};

/// Simulates the pilot (to fix m(t)) and then the analysis replicates in batches, writing each
/// batch file and updating the manifest atomically after every batch. An existing manifest in
/// the output directory is resumed when its config hash matches and is a ConfigError otherwise.
/// `stop_after_batches` ends the call early with complete = false.
EnsembleRun run_ensemble(const RunConfig& config);

/// Reads a finished output directory back (ConfigError when incomplete or of another config).
EnsembleRun load_ensemble(const RunConfig& config);

/// Per-column count, mean and variance of the records, merged batch by batch in order.
std::string column_statistics_csv(const Ensemble& ensemble, std::size_t batch_size);

/// One replicate of the configured sampler at the grid checkpoints.
Snapshots simulate_replicate(const RunConfig& config, const CoefficientPair& coeffs,
                             const rng::Lineage& lineage);

}  // namespace shelab
