#include <gtest/gtest.h>

#include <filesystem>

#include "shelab/config.hpp"
#include "shelab/error.hpp"

using namespace shelab;

TEST(ParseConfig, MinimalKeepsDefaults) {
    const auto c = parse_config(R"({"seed": 7})");
    EXPECT_EQ(c.seed.value(), 7u);
    EXPECT_EQ(c.replicates, 2000u);
    EXPECT_EQ(c.grid.cells, 768);
    EXPECT_EQ(c.grid.checkpoints.size(), 16u);
    EXPECT_NO_THROW(c.validate());
}

TEST(ParseConfig, ReadsNestedSections) {
    const auto c = parse_config(R"({
        "seed": 1, "replicates": 100, "batch_size": 10, "workers": 4,
        "grid": {"L": 8, "nx": 128, "T": 0.25, "nt": 128, "checkpoints": [0.125, 0.25]},
        "coefficients": {"name": "affine", "b0": 0.5, "s1": 0.25},
        "sampler": "euler", "radii": [1, 2], "fclt_times": [0.125, 0.25],
        "ergodicity": {"time": 0.25, "radii": [1, 2]},
        "malliavin": {"replicates": 20, "nested": 10, "p": [2]}
    })");
    EXPECT_EQ(c.grid.cells, 128);
    EXPECT_DOUBLE_EQ(c.grid.half_width, 8.0);
    EXPECT_EQ(c.coefficients.name, "affine");
    EXPECT_DOUBLE_EQ(c.coefficients.b0, 0.5);
    EXPECT_DOUBLE_EQ(c.coefficients.s1, 0.25);
    EXPECT_EQ(c.malliavin.p_orders, std::vector<int>{2});
    EXPECT_EQ(c.workers, 4);
    EXPECT_NO_THROW(c.validate());
}

TEST(ParseConfig, UnknownKeyIsConfigError) {
    EXPECT_THROW(parse_config(R"({"seed": 1, "replicate": 10})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"seed": 1, "grid": {"nx": 64, "dx": 0.1}})"), ConfigError);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Validate, RejectsBadRuns) {
    EXPECT_THROW(parse_config("{}").validate(), ConfigError);  // no seed
    EXPECT_THROW(parse_config(R"({"seed": 1, "replicates": 0})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"seed": 1, "pilot_fraction": 0})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"seed": 1, "radii": [30]})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"seed": 1, "fclt_times": [0.3]})").validate(), ConfigError);
    EXPECT_THROW(parse_config(R"({"seed": 1, "coefficients": "quadratic"})").validate(), ConfigError);
}

TEST(ConfigHash, IgnoresExecutionOnlyFields) {
    auto a = parse_config(R"({"seed": 1})");
    auto b = a;
    b.workers = 8;
    b.out_dir = "elsewhere";
    b.stop_after_batches = 3;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 64u);
}

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(LoadConfig, MissingFileIsConfigError) {
    EXPECT_THROW(load_config(std::filesystem::temp_directory_path() / "shelab-no-such-config.json"),
                 ConfigError);
}

TEST(PilotSize, CeilingOfFraction) {
    RunConfig c;
    c.replicates = 2000;
    EXPECT_EQ(c.pilot_replicates(), 500u);
    c.replicates = 1;
    EXPECT_EQ(c.pilot_replicates(), 1u);
    c.replicates = 101;
    c.batch_size = 50;
    EXPECT_EQ(c.batch_count(), 3u);
}
