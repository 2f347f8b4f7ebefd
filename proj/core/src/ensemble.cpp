#include "shelab/ensemble.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "shelab/error.hpp"
#include "shelab/spectral.hpp"
#include "shelab/stats.hpp"

#ifndef SHELAB_VERSION
#define SHELAB_VERSION "0.0.0"
#endif

namespace shelab {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume a little-endian host");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kSnapMagic[8] = {'S', 'H', 'E', 'S', 'N', 'A', 'P', '1'};
constexpr char kRecMagic[8] = {'S', 'H', 'E', 'R', 'E', 'C', '0', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    template <class T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw ConfigError(name_ + ": truncated file");
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    void expect_magic(const char (&magic)[8]) {
        if (bytes_.size() < 8 || std::memcmp(bytes_.data(), magic, 8) != 0) {
            throw ConfigError(name_ + ": bad magic");
        }
        pos_ = 8;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::string bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string encode_snapshots(const Snapshots& snaps) {
    std::string out(kSnapMagic, 8);
    const std::uint32_t nx = snaps.empty() ? 0u : static_cast<std::uint32_t>(snaps.front().values.size());
    put(out, kFormatVersion);
    put(out, nx);
    put(out, static_cast<std::uint32_t>(snaps.size()));
    for (const auto& s : snaps) {
        if (s.values.size() != nx) throw DomainError("snapshots of unequal size");
        put(out, s.t);
        for (double v : s.values) put(out, v);
    }
    return out;
}

std::string encode_records(const std::vector<std::vector<double>>& rows) {
    std::string out(kRecMagic, 8);
    const std::uint64_t cols = rows.empty() ? 0u : rows.front().size();
    put(out, kFormatVersion);
    put(out, static_cast<std::uint64_t>(rows.size()));
    put(out, cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw DomainError("records of unequal size");
        for (double v : r) put(out, v);
    }
    return out;
}

std::vector<std::vector<double>> decode_records(std::string bytes, const std::string& name) {
    Reader in(std::move(bytes), name);
    in.expect_magic(kRecMagic);
    if (in.get<std::uint32_t>() != kFormatVersion) throw ConfigError(name + ": unsupported version");
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
    for (auto& r : out) {
        for (auto& v : r) v = in.get<double>();
    }
    if (!in.at_end()) throw ConfigError(name + ": trailing bytes");
    return out;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string batch_name(std::size_t b) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "batches/batch_%05zu.bin", b);
    return buf;
}

std::string snapshot_name(std::size_t r) {
    char buf[56];
    std::snprintf(buf, sizeof buf, "snapshots/replicate_%06zu.bin", r);
    return buf;
}

constexpr const char* kPilotFile = "pilot.bin";
constexpr const char* kColumnStatsFile = "column_stats.csv";
constexpr const char* kManifestFile = "manifest.json";

// Spatial mean of u at each checkpoint, one row per pilot replicate.
std::vector<double> pilot_row(const Snapshots& snaps) {
    std::vector<double> row;
    row.reserve(snaps.size());
    for (const auto& s : snaps) {
        double sum = 0.0;
        for (double v : s.values) sum += v;
        row.push_back(sum / static_cast<double>(s.values.size()));
    }
    return row;
}

std::vector<double> mean_curve_of(const std::vector<std::vector<double>>& pilot) {
    std::vector<double> mean(pilot.empty() ? 0 : pilot.front().size(), 0.0);
    for (const auto& row : pilot) {
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    }
    for (double& m : mean) m /= static_cast<double>(pilot.size());
    return mean;
}

void add_range(std::vector<std::pair<std::size_t, std::size_t>>& ranges, std::size_t begin,
               std::size_t end) {
    ranges.emplace_back(begin, end);
    std::sort(ranges.begin(), ranges.end());
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && r.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, r.second);
        } else {
            merged.push_back(r);
        }
    }
    ranges = std::move(merged);
}

bool covered(const std::vector<std::pair<std::size_t, std::size_t>>& ranges, std::size_t begin,
             std::size_t end) {
    return std::any_of(ranges.begin(), ranges.end(),
                       [&](const auto& r) { return r.first <= begin && end <= r.second; });
}

void upsert_file(RunManifest& m, const std::string& path, const std::string& bytes) {
    const std::string digest = sha256_hex(bytes);
    auto it = std::find_if(m.files.begin(), m.files.end(), [&](const auto& f) { return f.path == path; });
    if (it != m.files.end()) {
        it->sha256 = digest;
    } else {
        m.files.push_back({path, digest});
        std::sort(m.files.begin(), m.files.end(),
                  [](const auto& a, const auto& b) { return a.path < b.path; });
    }
}

void save_manifest(const fs::path& dir, RunManifest& m) {
    m.updated = utc_now();
    write_file_atomic(dir / kManifestFile, m.to_json());
}

std::vector<std::vector<double>> assemble_rows(const fs::path& dir, std::size_t batches) {
    std::vector<std::vector<double>> rows;
    for (std::size_t b = 0; b < batches; ++b) {
        auto part = read_records(dir / batch_name(b));
        for (auto& r : part) rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                if (failed.load()) return;
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                    return;
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void write_snapshots(const fs::path& path, const Snapshots& snapshots) {
    write_file_atomic(path, encode_snapshots(snapshots));
}

Snapshots read_snapshots(const fs::path& path) {
    Reader in(read_file(path), path.string());
    in.expect_magic(kSnapMagic);
    if (in.get<std::uint32_t>() != kFormatVersion) throw ConfigError(path.string() + ": unsupported version");
    const auto nx = in.get<std::uint32_t>();
    const auto count = in.get<std::uint32_t>();
    Snapshots out(count);
    for (auto& s : out) {
        s.t = in.get<double>();
        s.values.resize(nx);
        for (auto& v : s.values) v = in.get<double>();
    }
    if (!in.at_end()) throw ConfigError(path.string() + ": trailing bytes");
    return out;
}

void write_records(const fs::path& path, const std::vector<std::vector<double>>& rows) {
    write_file_atomic(path, encode_records(rows));
}

std::vector<std::vector<double>> read_records(const fs::path& path) {
    return decode_records(read_file(path), path.string());
}

std::string RunManifest::to_json() const {
    json j;
    j["schema"] = schema;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["replicates"] = replicates;
    j["batch_size"] = batch_size;
    j["pilot_done"] = pilot_done;
    j["completed"] = completed;
    json files_json = json::array();
    for (const auto& f : files) files_json.push_back({{"path", f.path}, {"sha256", f.sha256}});
    j["files"] = files_json;
    j["updated"] = updated;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    RunManifest m;
    try {
        const json j = json::parse(text);
        m.schema = j.at("schema").get<int>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.replicates = j.at("replicates").get<std::size_t>();
        m.batch_size = j.at("batch_size").get<std::size_t>();
        m.pilot_done = j.at("pilot_done").get<bool>();
        m.completed = j.at("completed").get<std::vector<std::pair<std::size_t, std::size_t>>>();
        for (const auto& f : j.at("files")) {
            m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
        }
        m.updated = j.value("updated", "");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("unreadable manifest: ") + e.what());
    }
    return m;
}

Snapshots simulate_replicate(const RunConfig& config, const CoefficientPair& coeffs,
                             const rng::Lineage& lineage) {
    if (config.sampler == Sampler::spectral) {
        rng::Lineage spectral = lineage;
        if (spectral.stream == rng::Stream::analysis) spectral.stream = rng::Stream::spectral;
        return exact_additive_sample(config.grid, coeffs, config.grid.checkpoints, spectral);
    }
    return simulate(config.grid, coeffs, lineage);
}

EnsembleRun run_ensemble(const RunConfig& config) {
    config.validate();
    const fs::path dir = config.out_dir;
    fs::create_directories(dir);
    const std::string hash = config_hash(config);
    const CoefficientPair coeffs = config.coefficients.build();
    const RecordLayout layout = config.layout();
    const std::uint64_t seed = *config.seed;

    RunManifest manifest;
    if (fs::exists(dir / kManifestFile)) {
        manifest = RunManifest::from_json(read_file(dir / kManifestFile));
        if (manifest.config_hash != hash) {
            throw ConfigError("output directory '" + dir.string() +
                              "' holds a run of a different config (hash " + manifest.config_hash +
                              ", expected " + hash + ")");
        }
    } else {
        manifest.config_hash = hash;
        manifest.version = SHELAB_VERSION;
        manifest.replicates = config.replicates;
        manifest.batch_size = config.batch_size;
        save_manifest(dir, manifest);
    }

    EnsembleRun result;

    // Pilot: fixes the mean curve m(t) used to centre every analysis record.
    std::vector<std::vector<double>> pilot;
    if (manifest.pilot_done && fs::exists(dir / kPilotFile)) {
        pilot = read_records(dir / kPilotFile);
    } else {
        pilot.resize(config.pilot_replicates());
        parallel_for(pilot.size(), config.workers, [&](std::size_t r) {
            pilot[r] = pilot_row(simulate_replicate(config, coeffs, {seed, r, rng::Stream::pilot}));
        });
        const std::string bytes = encode_records(pilot);
        write_file_atomic(dir / kPilotFile, bytes);
        upsert_file(manifest, kPilotFile, bytes);
        manifest.pilot_done = true;
        save_manifest(dir, manifest);
    }
    result.mean_curve = mean_curve_of(pilot);

    // Analysis batches still to do, in index order.
    const std::size_t batches = config.batch_count();
    std::vector<std::size_t> todo;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * config.batch_size;
        const std::size_t end = std::min(config.replicates, begin + config.batch_size);
        if (!covered(manifest.completed, begin, end) || !fs::exists(dir / batch_name(b))) todo.push_back(b);
    }
    if (config.stop_after_batches && todo.size() > *config.stop_after_batches) {
        todo.resize(*config.stop_after_batches);
    }

    std::mutex manifest_mutex;
    parallel_for(todo.size(), config.workers, [&](std::size_t k) {
        const std::size_t b = todo[k];
        const std::size_t begin = b * config.batch_size;
        const std::size_t end = std::min(config.replicates, begin + config.batch_size);
        std::vector<std::vector<double>> rows;
        rows.reserve(end - begin);
        std::vector<std::pair<std::string, std::string>> snapshot_files;
        for (std::size_t r = begin; r < end; ++r) {
            const Snapshots snaps = simulate_replicate(config, coeffs, {seed, r, rng::Stream::analysis});
            rows.push_back(make_record(layout, snaps, result.mean_curve));
            if (r < config.snapshot_replicates) {
                const std::string bytes = encode_snapshots(snaps);
                write_file_atomic(dir / snapshot_name(r), bytes);
                snapshot_files.emplace_back(snapshot_name(r), bytes);
            }
        }
        const std::string bytes = encode_records(rows);
        write_file_atomic(dir / batch_name(b), bytes);
        std::lock_guard lock(manifest_mutex);
        upsert_file(manifest, batch_name(b), bytes);
        for (const auto& [name, snap_bytes] : snapshot_files) upsert_file(manifest, name, snap_bytes);
        add_range(manifest.completed, begin, end);
        save_manifest(dir, manifest);
    });
    result.batches_run = todo.size();

    result.complete = covered(manifest.completed, 0, config.replicates);
    if (result.complete) {
        result.ensemble.layout = layout;
        result.ensemble.rows = assemble_rows(dir, batches);
        const std::string csv = column_statistics_csv(result.ensemble, config.batch_size);
        write_file_atomic(dir / kColumnStatsFile, csv);
        upsert_file(manifest, kColumnStatsFile, csv);
        save_manifest(dir, manifest);
    }
    result.manifest = manifest;
    return result;
}

EnsembleRun load_ensemble(const RunConfig& config) {
    config.validate();
    const fs::path dir = config.out_dir;
    if (!fs::exists(dir / kManifestFile)) throw ConfigError("no manifest in '" + dir.string() + "'");
    EnsembleRun result;
    result.manifest = RunManifest::from_json(read_file(dir / kManifestFile));
    if (result.manifest.config_hash != config_hash(config)) {
        throw ConfigError("output directory '" + dir.string() + "' holds a run of a different config");
    }
    if (!result.manifest.pilot_done || !covered(result.manifest.completed, 0, config.replicates)) {
        throw ConfigError("run in '" + dir.string() + "' is incomplete; rerun to resume");
    }
    result.mean_curve = mean_curve_of(read_records(dir / kPilotFile));
    result.ensemble.layout = config.layout();
    result.ensemble.rows = assemble_rows(dir, config.batch_count());
    result.complete = true;
    return result;
}

std::string column_statistics_csv(const Ensemble& ensemble, std::size_t batch_size) {
    const std::size_t cols = ensemble.layout.size();
    std::vector<stats::StatsAccumulator> total(cols);
    for (std::size_t begin = 0; begin < ensemble.rows.size(); begin += batch_size) {
        const std::size_t end = std::min(ensemble.rows.size(), begin + batch_size);
        std::vector<stats::StatsAccumulator> part(cols);
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t c = 0; c < cols; ++c) part[c].add(ensemble.rows[r][c]);
        }
        for (std::size_t c = 0; c < cols; ++c) total[c].merge(part[c]);
    }
    std::string out = "column,count,mean,variance\n";
    char line[128];
    for (std::size_t c = 0; c < cols; ++c) {
        std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g\n", c, total[c].count(), total[c].mean(),
                      total[c].variance());
        out += line;
    }
    return out;
}

}  // namespace shelab
