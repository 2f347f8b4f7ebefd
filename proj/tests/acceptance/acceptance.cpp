// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: shelab_acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "shelab/battery.hpp"
#include "shelab/config.hpp"
#include "shelab/ensemble.hpp"

namespace fs = std::filesystem;
using namespace shelab;

namespace {

constexpr std::uint64_t kSeed = 20261015;

struct Line {
    int id;
    bool passed;
    std::string text;
};

std::vector<Line> lines;

const CheckRecord* find(const CheckList& checks, const std::string& name) {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

// Verdict and a short "name=value (<= threshold)" summary over the named gating checks.
bool gather(const CheckList& checks, const std::vector<std::string>& names, std::string& text) {
    bool ok = true;
    for (const auto& n : names) {
        const CheckRecord* c = find(checks, n);
        char buf[256];
        if (!c) {
            std::snprintf(buf, sizeof buf, " %s=MISSING;", n.c_str());
            ok = false;
        } else {
            std::snprintf(buf, sizeof buf, " %s=%.4g (limit %.4g)%s;", n.c_str(), c->value, c->threshold,
                          c->passed ? "" : " FAILED");
            ok = ok && c->passed;
        }
        text += buf;
    }
    return ok;
}

void report(int id, bool passed, const std::string& text) {
    lines.push_back({id, passed, text});
    std::printf("criterion %2d: %s %s\n", id, passed ? "PASS" : "FAIL", text.c_str());
    std::fflush(stdout);
}

void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunConfig base_config(const fs::path& dir, const std::string& coeff) {
    RunConfig c;
    c.seed = kSeed;
    c.coefficients.name = coeff;
    c.functionals = default_functionals();
    c.workers = 8;
    c.out_dir = dir;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Every file of a run directory except the manifest (which carries a timestamp).
std::vector<std::pair<std::string, std::string>> run_files(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

RunConfig determinism_config(const fs::path& dir) {
    RunConfig c;
    c.seed = kSeed;
    c.coefficients.name = "smooth-bounded";
    c.grid.half_width = 8.0;
    c.grid.cells = 128;
    c.grid.final_time = 0.25;
    c.grid.steps = 128;
    c.grid.checkpoints = {0.125, 0.25};
    c.replicates = 600;
    c.batch_size = 50;
    c.radii = {0.5, 1.0, 1.5, 2.0};
    c.fclt_times = {0.125, 0.25};
    c.ergodic_radii = {0.5, 1.0, 2.0};
    c.ergodic_time = 0.25;
    c.functionals = default_functionals();
    c.snapshot_replicates = 3;
    c.out_dir = dir;
    return c;
}

// Ensemble run plus the battery statistics file for the determinism comparison.
std::vector<std::pair<std::string, std::string>> determinism_run(RunConfig c, int workers,
                                                                 std::size_t interrupt_after) {
    fs::remove_all(c.out_dir);
    c.workers = workers;
    if (interrupt_after > 0) {
        RunConfig partial = c;
        partial.stop_after_batches = interrupt_after;
        partial.workers = 3;
        if (run_ensemble(partial).complete) throw std::runtime_error("interrupted run completed early");
    }
    const auto run = run_ensemble(c);
    if (!run.complete) throw std::runtime_error("run incomplete");
    battery::Output out;
    battery::variance_checks(c, run.ensemble, out);
    battery::clt_checks(c, run.ensemble, 0.25, 2.0, out);
    battery::fclt_checks(c, run.ensemble, 2.0, out);
    battery::ergodicity_checks(c, run.ensemble, out);
    battery::write_output(c.out_dir / "battery", out);
    return run_files(c.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "shelab-acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    std::printf("work directory %s\n", work.string().c_str());

    guarded(1, [] {
        const auto out = battery::kernel_check();
        std::string text;
        const bool ok = gather(out.checks,
                               {"square_identity_max_relative", "product_decomposition_max_relative",
                                "semigroup_max_relative", "chi_square_integral_max_relative",
                                "kernel_suite_seconds"},
                               text);
        report(1, ok, "kernel identities:" + text);
        std::string text2;
        const bool ok2 = gather(out.checks, {"kernel_product_bound_violations", "kernel_suite_seconds"}, text2);
        report(2, ok2, "kernel-product bound:" + text2);
    });

    guarded(3, [] {
        const auto out = battery::appendix_check();
        bool ok = true;
        double worst = 0.0;
        for (const auto& c : out.checks) {
            ok = ok && (c.informational || c.passed);
            if (c.name.rfind("recursion_ratio", 0) == 0) worst = std::max(worst, c.value);
        }
        const CheckRecord* secs = find(out.checks, "appendix_suite_seconds");
        char buf[200];
        std::snprintf(buf, sizeof buf, "recursion max ratio %.6g over 27 cases, Gronwall at 2 grids, %.2f s",
                      worst, secs ? secs->value : -1.0);
        report(3, ok, buf);
    });

    // Additive and smooth-bounded ensembles on the default grid.
    EnsembleRun additive, smooth;
    RunConfig additive_cfg = base_config(work / "additive", "additive");
    RunConfig smooth_cfg = base_config(work / "smooth", "smooth-bounded");
    double additive_secs = 0.0;
    guarded(4, [&] {
        const auto start = std::chrono::steady_clock::now();
        additive = run_ensemble(additive_cfg);
        additive_secs = elapsed(start);
        battery::Output out;
        battery::variance_checks(additive_cfg, additive.ensemble, out);
        std::string text;
        const bool ok = gather(out.checks, {"pointwise_variance[t=1]"}, text);
        const CheckRecord* c = find(out.checks, "pointwise_variance[t=1]");
        char buf[160];
        std::snprintf(buf, sizeof buf, " combined SE %.3g, N=%zu, %.0f s", c ? c->error : 0.0,
                      additive.ensemble.size(), additive_secs);
        report(4, ok, "Var u(1,x) vs 1/sqrt(pi):" + text + buf);
    });

    battery::Output additive_clt;
    guarded(5, [&] {
        battery::clt_checks(additive_cfg, additive.ensemble, 1.0, 8.0, additive_clt);
        std::string text;
        const bool ok = gather(additive_clt.checks, {"variance_slope[t=1]", "variance_oracle_agreement[t=1]"}, text);
        report(5, ok, "sigma_R^2 slope over R in {2,4,8,16} and oracle agreement:" + text);
    });

    guarded(6, [&] {
        smooth = run_ensemble(smooth_cfg);
        battery::Output out;
        battery::clt_checks(smooth_cfg, smooth.ensemble, 1.0, 8.0, out);
        std::string text;
        bool ok = gather(additive_clt.checks, {"ks_within_band[t=1][R=8]"}, text);
        text = " additive:" + text + " smooth:";
        ok = gather(out.checks,
                    {"ks_within_band[t=1][R=8]", "abs_excess_kurtosis[t=1][R=8]", "ks_non_increasing[t=1][R=8]"},
                    text) && ok;
        report(6, ok, "normality of F_R/sigma_R at R=8, N=2000:" + text);
    });

    guarded(7, [&] {
        battery::Output out;
        battery::fclt_checks(additive_cfg, additive.ensemble, 8.0, out);
        std::string text;
        const bool ok = gather(out.checks,
                               {"fclt_covariance_max_relative[R=8]", "holder_refinement_ratio[gamma=0.4][R=8]"},
                               text);
        report(7, ok, "Cov(F(t_i), F(t_j))/R vs 2 min(t_i, t_j) and Holder refinement:" + text);
    });

    guarded(8, [&] {
        Ensemble half{smooth.ensemble.layout,
                      {smooth.ensemble.rows.begin(), smooth.ensemble.rows.begin() + 1000}};
        battery::Output out;
        battery::ergodicity_checks(smooth_cfg, half, out);
        std::string text;
        const bool ok = gather(out.checks, {"ergodic_band_ratio[cos_u][t=1]"}, text);
        report(8, ok, "R Var of averages of cos u(1, .), R = 2..16, N=1000:" + text);
    });

    guarded(9, [&] {
        RunConfig a = base_config(work / "malliavin-additive", "additive");
        RunConfig s = base_config(work / "malliavin-smooth", "smooth-bounded");
        const auto out_a = battery::malliavin_check(a);
        const auto out_s = battery::malliavin_check(s);
        const auto gating = [](const CheckList& checks) {
            std::vector<std::string> names;
            for (const auto& c : checks) {
                if (!c.informational) names.push_back(c.name);
            }
            return names;
        };
        std::string text = " additive:";
        bool ok = gather(out_a.checks, gating(out_a.checks), text);
        text += " smooth:";
        ok = gather(out_s.checks, gating(out_s.checks), text) && ok;
        report(9, ok, "Malliavin derivative ratios:" + text);
    });

    guarded(10, [&] {
        const RunConfig c = determinism_config(work / "determinism");
        const auto one = determinism_run(c, 1, 0);
        const auto eight = determinism_run(c, 8, 0);
        const auto resumed = determinism_run(c, 2, 5);
        const bool ok = !one.empty() && one == eight && one == resumed;
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "%zu output files compared byte-for-byte: 1 vs 8 workers %s, interrupted+resumed %s",
                      one.size(), one == eight ? "identical" : "DIFFER", one == resumed ? "identical" : "DIFFER");
        report(10, ok, buf);
    });

    const bool all = std::all_of(lines.begin(), lines.end(), [](const Line& l) { return l.passed; });
    std::printf("%zu criteria, %s\n", lines.size(), all ? "all passed" : "FAILURES");
    return all && lines.size() == 10 ? 0 : 1;
}
