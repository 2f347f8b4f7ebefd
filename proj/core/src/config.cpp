#include "shelab/config.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "shelab/error.hpp"

namespace shelab {

using nlohmann::json;

namespace {

constexpr double kTimeTol = 1e-9;

}  // namespace

GridSpec default_run_grid() {
    GridSpec g = default_grid();
    g.checkpoints.clear();
    for (int k = 1; k <= 16; ++k) g.checkpoints.push_back(k / 16.0);
    return g;
}

GridSpec malliavin_default_grid() {
    GridSpec g;
    g.half_width = 8.0;
    g.cells = 256;
    g.final_time = 1.0;
    g.steps = 768;  // dt / dx^2 = 1/3
    g.checkpoints = {0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
    return g;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

GridSpec grid_from(const json& j, GridSpec g) {
    if (!j.is_object()) throw ConfigError("grid must be an object");
    reject_unknown(j, {"L", "nx", "T", "nt", "checkpoints"}, "grid");
    read(j, "L", g.half_width);
    read(j, "nx", g.cells);
    read(j, "T", g.final_time);
    read(j, "nt", g.steps);
    read(j, "checkpoints", g.checkpoints);
    return g;
}

json grid_to(const GridSpec& g) {
    return {{"L", g.half_width}, {"nx", g.cells}, {"T", g.final_time}, {"nt", g.steps},
            {"checkpoints", g.checkpoints}};
}

json functional_to(const ErgodicFunctional& f) {
    return {{"name", f.name}, {"g", f.use_sin ? "sin" : "cos"}, {"weights", f.weights},
            {"shifts", f.shifts}};
}

ErgodicFunctional functional_from(const json& j) {
    reject_unknown(j, {"name", "g", "weights", "shifts"}, "ergodicity functional");
    ErgodicFunctional f;
    read(j, "name", f.name);
    std::string g = "cos";
    read(j, "g", g);
    if (g != "cos" && g != "sin") throw ConfigError("ergodicity functional g must be cos or sin");
    f.use_sin = g == "sin";
    read(j, "weights", f.weights);
    read(j, "shifts", f.shifts);
    return f;
}

bool is_checkpoint(const GridSpec& g, double t) {
    return std::any_of(g.checkpoints.begin(), g.checkpoints.end(),
                       [t](double c) { return std::abs(c - t) <= kTimeTol; });
}

int checkpoint_of(const GridSpec& g, double t) {
    for (std::size_t i = 0; i < g.checkpoints.size(); ++i) {
        if (std::abs(g.checkpoints[i] - t) <= kTimeTol) return static_cast<int>(i);
    }
    throw ConfigError("time " + std::to_string(t) + " is not a checkpoint");
}

}  // namespace

CoefficientPair CoefficientSpec::build() const {
    if (name == "affine") return CoefficientPair::affine(b0, b1, s0, s1);
    return CoefficientPair::from_name(name, lambda);
}

std::vector<ErgodicFunctional> default_functionals() {
    return {{"cos_u", false, {1.0}, {0.0}},
            {"sin_u", true, {1.0}, {0.0}},
            {"cos_pair", false, {1.0, 0.5}, {0.0, 0.5}}};
}

std::size_t RunConfig::pilot_replicates() const {
    return static_cast<std::size_t>(std::ceil(pilot_fraction * static_cast<double>(replicates) - 1e-9));
}

std::size_t RunConfig::batch_count() const {
    return (replicates + batch_size - 1) / batch_size;
}

void RunConfig::validate() const {
    if (!seed) throw ConfigError("config: 'seed' is mandatory (no wall-clock seeding)");
    if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
    if (!(pilot_fraction > 0.0 && pilot_fraction <= 1.0)) {
        throw ConfigError("config: pilot_fraction must lie in (0, 1]");
    }
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    double reach = 0.0;
    for (double r : radii) reach = std::max(reach, r);
    for (double r : ergodic_radii) reach = std::max(reach, r);
    for (const auto& f : functionals) {
        for (double z : f.shifts) {
            for (double r : ergodic_radii) reach = std::max(reach, r + std::abs(z));
        }
    }
    grid.validate(reach);
    for (double t : fclt_times) {
        if (!is_checkpoint(grid, t)) throw ConfigError("config: fclt time " + std::to_string(t) + " is not a checkpoint");
    }
    for (const auto& [t, s] : extra_pairs) {
        if (!is_checkpoint(grid, t) || !is_checkpoint(grid, s)) {
            throw ConfigError("config: covariance pair times must be checkpoints");
        }
    }
    if (!functionals.empty() && !is_checkpoint(grid, ergodic_time)) {
        throw ConfigError("config: ergodicity time must be a checkpoint");
    }
    coefficients.build().spot_check();
    malliavin.grid.validate();
    if (malliavin.nested < 2 || malliavin.nested > malliavin.replicates) {
        throw ConfigError("config: malliavin.nested must lie in [2, replicates]");
    }
    for (int p : malliavin.p_orders) {
        if (p != 2 && p != 4) throw ConfigError("config: malliavin p must be 2 or 4");
    }
    (void)layout();
}

RecordLayout RunConfig::layout() const {
    std::vector<std::pair<int, int>> pairs;
    const auto add = [&](int a, int b) {
        if (std::find(pairs.begin(), pairs.end(), std::pair{a, b}) == pairs.end() &&
            std::find(pairs.begin(), pairs.end(), std::pair{b, a}) == pairs.end()) {
            pairs.emplace_back(a, b);
        }
    };
    for (std::size_t c = 0; c < grid.checkpoints.size(); ++c) add(static_cast<int>(c), static_cast<int>(c));
    for (std::size_t i = 0; i < fclt_times.size(); ++i) {
        for (std::size_t j = i + 1; j < fclt_times.size(); ++j) {
            add(checkpoint_of(grid, fclt_times[i]), checkpoint_of(grid, fclt_times[j]));
        }
    }
    for (const auto& [t, s] : extra_pairs) add(checkpoint_of(grid, t), checkpoint_of(grid, s));
    const int ergodic_cp = functionals.empty() ? 0 : checkpoint_of(grid, ergodic_time);
    return RecordLayout(grid, radii, pairs, functionals, ergodic_radii, ergodic_cp);
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"seed", "replicates", "pilot_fraction", "batch_size", "workers", "out", "grid",
                    "coefficients", "sampler", "radii", "fclt_times", "covariance_pairs",
                    "ergodicity", "snapshot_replicates", "malliavin", "stop_after_batches"},
                   "config");
    RunConfig c;
    c.functionals = default_functionals();
    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read(j, "seed", s);
        c.seed = s;
    }
    read(j, "replicates", c.replicates);
    read(j, "pilot_fraction", c.pilot_fraction);
    read(j, "batch_size", c.batch_size);
    read(j, "workers", c.workers);
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("grid")) c.grid = grid_from(j.at("grid"), c.grid);
    if (j.contains("coefficients")) {
        const auto& cj = j.at("coefficients");
        if (cj.is_string()) {
            c.coefficients.name = cj.get<std::string>();
        } else {
            reject_unknown(cj, {"name", "lambda", "b0", "b1", "s0", "s1"}, "coefficients");
            read(cj, "name", c.coefficients.name);
            read(cj, "lambda", c.coefficients.lambda);
            read(cj, "b0", c.coefficients.b0);
            read(cj, "b1", c.coefficients.b1);
            read(cj, "s0", c.coefficients.s0);
            read(cj, "s1", c.coefficients.s1);
        }
    }
    if (j.contains("sampler")) {
        const auto s = j.at("sampler").get<std::string>();
        if (s == "euler") c.sampler = Sampler::euler;
        else if (s == "spectral") c.sampler = Sampler::spectral;
        else throw ConfigError("sampler must be euler or spectral");
    }
    read(j, "radii", c.radii);
    read(j, "fclt_times", c.fclt_times);
    read(j, "covariance_pairs", c.extra_pairs);
    if (j.contains("ergodicity")) {
        const auto& ej = j.at("ergodicity");
        reject_unknown(ej, {"time", "radii", "functionals"}, "ergodicity");
        read(ej, "time", c.ergodic_time);
        read(ej, "radii", c.ergodic_radii);
        if (ej.contains("functionals")) {
            c.functionals.clear();
            for (const auto& f : ej.at("functionals")) c.functionals.push_back(functional_from(f));
        }
    }
    read(j, "snapshot_replicates", c.snapshot_replicates);
    if (j.contains("malliavin")) {
        const auto& mj = j.at("malliavin");
        reject_unknown(mj, {"grid", "replicates", "nested", "p", "cell_stride", "integrated_radius"},
                       "malliavin");
        if (mj.contains("grid")) c.malliavin.grid = grid_from(mj.at("grid"), c.malliavin.grid);
        read(mj, "replicates", c.malliavin.replicates);
        read(mj, "nested", c.malliavin.nested);
        read(mj, "p", c.malliavin.p_orders);
        read(mj, "cell_stride", c.malliavin.cell_stride);
        read(mj, "integrated_radius", c.malliavin.integrated_radius);
    }
    if (j.contains("stop_after_batches")) {
        std::size_t k = 0;
        read(j, "stop_after_batches", k);
        c.stop_after_batches = k;
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    j["replicates"] = c.replicates;
    j["pilot_fraction"] = c.pilot_fraction;
    j["batch_size"] = c.batch_size;
    j["grid"] = grid_to(c.grid);
    j["coefficients"] = {{"name", c.coefficients.name}, {"lambda", c.coefficients.lambda},
                         {"b0", c.coefficients.b0}, {"b1", c.coefficients.b1},
                         {"s0", c.coefficients.s0}, {"s1", c.coefficients.s1}};
    j["sampler"] = c.sampler == Sampler::euler ? "euler" : "spectral";
    j["radii"] = c.radii;
    j["fclt_times"] = c.fclt_times;
    j["covariance_pairs"] = c.extra_pairs;
    json funcs = json::array();
    for (const auto& f : c.functionals) funcs.push_back(functional_to(f));
    j["ergodicity"] = {{"time", c.ergodic_time}, {"radii", c.ergodic_radii}, {"functionals", funcs}};
    j["snapshot_replicates"] = c.snapshot_replicates;
    j["malliavin"] = {{"grid", grid_to(c.malliavin.grid)},
                      {"replicates", c.malliavin.replicates},
                      {"nested", c.malliavin.nested},
                      {"p", c.malliavin.p_orders},
                      {"cell_stride", c.malliavin.cell_stride},
                      {"integrated_radius", c.malliavin.integrated_radius}};
    return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_json(c)); }

}  // namespace shelab
