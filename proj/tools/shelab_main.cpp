// shelab: command line surface over the core library.
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "shelab/battery.hpp"
#include "shelab/config.hpp"
#include "shelab/ensemble.hpp"
#include "shelab/error.hpp"

namespace fs = std::filesystem;
using namespace shelab;

namespace {

// Used only when no config file is given; a config file must name its own seed.
constexpr std::uint64_t kDefaultSeed = 20261015;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::string> coeff;
    std::optional<double> lambda;
    std::optional<std::string> sampler;
    std::optional<double> t;
    std::optional<double> radius;
    std::optional<std::size_t> stop_after;
};

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("config", opt.config_path, "JSON config file");
    sub->add_option("--seed", opt.seed, "Base seed");
    sub->add_option("--replicates", opt.replicates, "Ensemble size N")->check(CLI::PositiveNumber);
    sub->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--coeff", opt.coeff, "Coefficients")
        ->check(CLI::IsMember({"additive", "linear", "smooth-bounded"}));
    sub->add_option("--lambda", opt.lambda, "Drift rate of the linear coefficients");
    sub->add_option("--sampler", opt.sampler, "Replicate sampler")->check(CLI::IsMember({"euler", "spectral"}));
    sub->add_option("--t", opt.t, "Time of the fluctuation statistics");
    sub->add_option("--R", opt.radius, "Averaging radius");
    sub->add_option("--stop-after-batches", opt.stop_after, "Stop after this many new batches (resume later)");
}

template <class T>
void insert_sorted(std::vector<T>& v, T x) {
    if (std::any_of(v.begin(), v.end(), [&](T y) { return std::abs(y - x) <= 1e-9; })) return;
    v.insert(std::upper_bound(v.begin(), v.end(), x), x);
}

RunConfig build_config(const Options& opt, const std::string& command) {
    RunConfig c;
    if (!opt.config_path.empty()) {
        c = load_config(opt.config_path);
    } else {
        c.functionals = default_functionals();
        c.seed = kDefaultSeed;
    }
    if (opt.seed) c.seed = *opt.seed;
    if (opt.replicates) {
        if (command == "malliavin-check") {
            c.malliavin.replicates = *opt.replicates;
            c.malliavin.nested = std::max<std::size_t>(2, *opt.replicates / 2);
        } else {
            c.replicates = *opt.replicates;
        }
    }
    if (opt.workers) c.workers = *opt.workers;
    if (opt.out) c.out_dir = *opt.out;
    if (opt.coeff) c.coefficients = CoefficientSpec{*opt.coeff};
    if (opt.lambda) c.coefficients.lambda = *opt.lambda;
    if (opt.sampler) c.sampler = *opt.sampler == "spectral" ? Sampler::spectral : Sampler::euler;
    if (opt.t) insert_sorted(c.grid.checkpoints, *opt.t);
    if (opt.radius) insert_sorted(c.radii, *opt.radius);
    if (opt.stop_after) c.stop_after_batches = *opt.stop_after;
    c.validate();
    return c;
}

// Runs (or resumes) the ensemble of `config` under <out>/runs/<hash prefix>.
std::optional<Ensemble> ensemble_for(RunConfig config, battery::Output& out, bool load_only) {
    config.out_dir = config.out_dir / "runs" / out.config_hash.substr(0, 16);
    EnsembleRun run = load_only ? load_ensemble(config) : run_ensemble(config);
    std::size_t done = 0;
    for (const auto& [a, b] : run.manifest.completed) done += b - a;
    CheckRecord rec;
    rec.name = "replicates_completed";
    rec.value = static_cast<double>(done);
    rec.threshold = static_cast<double>(config.replicates);
    rec.passed = true;
    rec.informational = true;
    rec.detail = config.out_dir.string();
    out.checks.push_back(rec);
    if (!run.complete) {
        std::cout << "ensemble incomplete: " << done << " of " << config.replicates
                  << " replicates; rerun the same command to resume\n";
        return std::nullopt;
    }
    return std::move(run.ensemble);
}

double default_radius(const RunConfig& c, const Options& opt) {
    if (opt.radius) return *opt.radius;
    return std::find(c.radii.begin(), c.radii.end(), 8.0) != c.radii.end() ? 8.0 : c.radii.back();
}

battery::Output run_command(const std::string& command, const Options& opt, fs::path& out_dir) {
    if (command == "kernel-check" || command == "appendix-check") {
        if (!opt.config_path.empty()) out_dir = load_config(opt.config_path).out_dir;
        if (opt.out) out_dir = *opt.out;
        return command == "kernel-check" ? battery::kernel_check() : battery::appendix_check();
    }
    const RunConfig config = build_config(opt, command);
    out_dir = config.out_dir;
    if (command == "malliavin-check") return battery::malliavin_check(config);

    battery::Output out;
    out.command = command;
    out.config_hash = config_hash(config);
    const auto ens = ensemble_for(config, out, command == "report");
    if (!ens) return out;
    const double t = opt.t.value_or(config.grid.final_time);
    const double radius = default_radius(config, opt);
    if (command == "simulate" || command == "report") battery::variance_checks(config, *ens, out);
    if (command == "clt" || command == "report") battery::clt_checks(config, *ens, t, radius, out);
    if (command == "fclt" || command == "report") battery::fclt_checks(config, *ens, radius, out);
    if (command == "ergodicity" || command == "report") battery::ergodicity_checks(config, *ens, out);
    return out;
}

void print(const battery::Output& out, const fs::path& dir) {
    for (const auto& c : out.checks) {
        if (c.informational) continue;
        std::printf("%s %-60s value %.6g threshold %.6g\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.threshold);
    }
    std::printf("%s: %s (summary in %s)\n", out.command.c_str(), out.passed() ? "passed" : "FAILED",
                (dir / "summary.json").string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for the stochastic heat equation on the line"};
    app.require_subcommand(1);
    Options opt;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "Run the ensemble and check the pointwise variance"},
        {"kernel-check", "Heat kernel identities and the kernel-product bound"},
        {"appendix-check", "Recursion and Gronwall bounds"},
        {"malliavin-check", "Malliavin derivative ratios against their bound shapes"},
        {"clt", "Variance scaling and normality of spatial averages"},
        {"fclt", "Time covariance and Holder regularity of spatial averages"},
        {"ergodicity", "R Var of spatial averages of test functionals"},
        {"report", "All ensemble checks on a finished run"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        battery::Output usage;
        usage.command = "usage";
        usage.error = e.what();
        try {
            battery::write_output(fs::path("shelab-out") / "usage", usage);
        } catch (const std::exception&) {
        }
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    fs::path out_dir = opt.out.value_or("shelab-out");
    battery::Output out;
    int code = 0;
    try {
        out = run_command(command, opt, out_dir);
        code = out.passed() ? 0 : 1;
    } catch (const ConfigError& e) {
        out.error = e.what();
        code = 2;
    } catch (const DomainError& e) {
        out.error = e.what();
        code = 2;
    } catch (const StatisticsError& e) {
        out.error = e.what();
        code = 2;
    } catch (const MisuseError& e) {
        out.error = e.what();
        code = 2;
    } catch (const std::exception& e) {
        out.error = e.what();
        code = 1;
    }
    out.command = command;
    const fs::path dir = out_dir / command;
    try {
        battery::write_output(dir, out);
    } catch (const std::exception& e) {
        std::cerr << "cannot write summary: " << e.what() << "\n";
    }
    if (!out.error.empty()) std::cerr << "error: " << out.error << "\n";
    print(out, dir);
    return code;
}
