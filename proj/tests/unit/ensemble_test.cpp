#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "shelab/ensemble.hpp"
#include "shelab/error.hpp"

namespace fs = std::filesystem;
using namespace shelab;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("shelab-ensemble-test-" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config(const fs::path& dir) {
    RunConfig c;
    c.seed = 11;
    c.coefficients.name = "smooth-bounded";
    c.grid.half_width = 8.0;
    c.grid.cells = 64;
    c.grid.final_time = 0.25;
    c.grid.steps = 64;
    c.grid.checkpoints = {0.125, 0.25};
    c.replicates = 40;
    c.batch_size = 8;
    c.radii = {1.0, 2.0};
    c.fclt_times = {0.125, 0.25};
    c.ergodic_radii = {1.0, 2.0};
    c.ergodic_time = 0.25;
    c.functionals = default_functionals();
    c.out_dir = dir;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsTaskFailure) {
    EXPECT_THROW(parallel_for(100, 3, [](std::size_t i) {
                     if (i == 37) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Files, SnapshotAndRecordRoundTrip) {
    const auto dir = scratch("files");
    fs::create_directories(dir);
    const Snapshots s{{0.5, {1.0, -2.5, 3.25}}, {1.0, {0.0, 1e-300, -7.0}}};
    write_snapshots(dir / "s.bin", s);
    const auto back = read_snapshots(dir / "s.bin");
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].t, s[i].t);
        EXPECT_EQ(back[i].values, s[i].values);
    }
    const std::vector<std::vector<double>> rows{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
    write_records(dir / "r.bin", rows);
    EXPECT_EQ(read_records(dir / "r.bin"), rows);
    std::ofstream(dir / "bad.bin") << "not a record file";
    EXPECT_THROW(read_records(dir / "bad.bin"), std::exception);
    fs::remove_all(dir);
}

TEST(Manifest, JsonRoundTrip) {
    RunManifest m;
    m.config_hash = "abc";
    m.version = "1.0.0";
    m.replicates = 40;
    m.batch_size = 8;
    m.pilot_done = true;
    m.completed = {{0, 16}, {24, 32}};
    m.files = {{"pilot.bin", "00ff"}};
    m.updated = "2026-01-01T00:00:00Z";
    const auto b = RunManifest::from_json(m.to_json());
    EXPECT_EQ(b.config_hash, m.config_hash);
    EXPECT_EQ(b.completed, m.completed);
    ASSERT_EQ(b.files.size(), 1u);
    EXPECT_EQ(b.files[0].sha256, "00ff");
    EXPECT_TRUE(b.pilot_done);
}

TEST(RunEnsemble, WorkerCountDoesNotChangeResults) {
    auto a = small_config(scratch("w1"));
    auto b = small_config(scratch("w4"));
    b.workers = 4;
    const auto ra = run_ensemble(a), rb = run_ensemble(b);
    ASSERT_TRUE(ra.complete);
    ASSERT_TRUE(rb.complete);
    EXPECT_EQ(ra.ensemble.rows, rb.ensemble.rows);
    EXPECT_EQ(ra.mean_curve, rb.mean_curve);
    EXPECT_EQ(slurp(a.out_dir / "column_stats.csv"), slurp(b.out_dir / "column_stats.csv"));
    fs::remove_all(a.out_dir);
    fs::remove_all(b.out_dir);
}

TEST(RunEnsemble, ResumeMatchesUninterruptedRun) {
    auto whole = small_config(scratch("whole"));
    auto parts = small_config(scratch("parts"));
    const auto ref = run_ensemble(whole);
    parts.stop_after_batches = 2;
    const auto first = run_ensemble(parts);
    EXPECT_FALSE(first.complete);
    EXPECT_EQ(first.batches_run, 2u);
    EXPECT_THROW(load_ensemble(parts), ConfigError);
    parts.stop_after_batches.reset();
    parts.workers = 3;
    const auto rest = run_ensemble(parts);
    ASSERT_TRUE(rest.complete);
    EXPECT_EQ(rest.batches_run, 3u);
    EXPECT_EQ(rest.ensemble.rows, ref.ensemble.rows);
    EXPECT_EQ(load_ensemble(parts).ensemble.rows, ref.ensemble.rows);
    fs::remove_all(whole.out_dir);
    fs::remove_all(parts.out_dir);
}

TEST(RunEnsemble, OtherConfigInSameDirectoryIsConfigError) {
    auto c = small_config(scratch("mismatch"));
    c.stop_after_batches = 1;
    run_ensemble(c);
    c.seed = 12;
    EXPECT_THROW(run_ensemble(c), ConfigError);
    fs::remove_all(c.out_dir);
}

TEST(RunEnsemble, ZeroCoefficientsKeepTheInitialCondition) {
    auto c = small_config(scratch("zero"));
    c.coefficients.name = "affine";
    c.coefficients.s0 = 0.0;
    c.replicates = 1;
    c.snapshot_replicates = 1;
    const auto run = run_ensemble(c);
    ASSERT_TRUE(run.complete);
    ASSERT_EQ(run.ensemble.size(), 1u);
    ASSERT_EQ(run.manifest.completed.size(), 1u);
    EXPECT_EQ(run.manifest.completed[0], (std::pair<std::size_t, std::size_t>{0, 1}));
    for (double m : run.mean_curve) EXPECT_EQ(m, 1.0);
    const auto snaps = read_snapshots(c.out_dir / "snapshots" / "replicate_000000.bin");
    ASSERT_EQ(snaps.size(), 2u);
    for (const auto& s : snaps) {
        for (double u : s.values) EXPECT_EQ(u, 1.0);
    }
    fs::remove_all(c.out_dir);
}
