#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cslab/config.hpp"
#include "cslab/errors.hpp"
#include "cslab/output.hpp"

using namespace cslab;

namespace {

const char* kFull = R"(# every section
schema_version = 1
seed = 5

[output]
dir = out/x

[model]
kind = langevin
kernel = scaled
lambda = 0.3
epsilon = 0.2
friction = linear
mu = 0.5
diffusion = 0.1
particles = 10
dim = 1
horizon = 0.5
dt = 0.01

[scaling]
kind = generalized_friction
gamma = 0.5
lambda = 0.25
k_coef = 1
k_exponent = 1
alpha_coef = 1
alpha_exponent = 1

[sweep]
eps = 0.4, 0.2, 0.1
seeds = 1, 2
particles = 100
bounds = all
rh_limit = true

[grid]
dim = 1
half_width = 3
nodes = 65

[macrosolver]
rho0 = gaussian
rho0_mass = 0.02
potential = quadratic
stiffness = 0.1

[verify]
kernel_samples = 10
transport = true
)";

}  // namespace

TEST(Config, ParsesEverySection) {
    const auto c = parse_config_text(kFull);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.output_dir, "out/x");
    ASSERT_TRUE(c.simulation && c.sweep && c.macro && c.verify);
    EXPECT_EQ(c.simulation->model.model, ModelKind::langevin);
    EXPECT_EQ(c.sweep->config.eps_list, (std::vector<double>{0.4, 0.2, 0.1}));
    EXPECT_EQ(c.sweep->config.scaling.kind, ScalingKind::generalized_friction);
    EXPECT_TRUE(c.sweep->checks.rh_limit);
    EXPECT_EQ(c.macro->rho0_mass, 0.02);
    EXPECT_EQ(c.verify->kernel_samples, 10u);
}

TEST(Config, SerializeRoundTrip) {
    const auto c = parse_config_text(kFull);
    const std::string text = serialize_config(c);
    EXPECT_EQ(serialize_config(parse_config_text(text)), text);
}

TEST(Config, JsonMatchesText) {
    const auto json = R"({"schema_version": 1, "seed": 5, "output": {"dir": "out/x"},
        "verify": {"kernel_samples": 10, "transport": true}})";
    const auto text = "schema_version = 1\nseed = 5\n[output]\ndir = out/x\n[verify]\nkernel_samples = 10\ntransport = true\n";
    EXPECT_EQ(serialize_config(parse_config_json(json)), serialize_config(parse_config_text(text)));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config_text("schema_version = 1\n[verify]\nkernel_sample = 3\n"), ConfigError);
    EXPECT_THROW(parse_config_text("schema_version = 2\n[verify]\n"), ConfigError);
    EXPECT_THROW(parse_config_text("schema_version = 1\n[verify]\nkernel_samples = many\n"), ConfigError);
    EXPECT_THROW(parse_config_text("schema_version = 1\n[sweep]\neps = 0.1, 0.2\n"), ConfigError);
}

TEST(Config, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Output, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Output, CsvRowsAndColumnCheck) {
    CsvTable t({"a", "b"});
    t.cell(0.5).cell(std::uint64_t{3});
    t.end_row();
    EXPECT_EQ(t.text(), "a,b\n0.5,3\n");
    t.cell(1.0);
    EXPECT_THROW(t.end_row(), std::logic_error);
}

TEST(Output, ManifestListsSortedArtifacts) {
    const auto dir = std::filesystem::temp_directory_path() / "cslab_manifest_test";
    std::filesystem::remove_all(dir);
    ArtifactWriter w(dir);
    w.write("z.csv", "1\n");
    w.write("sub/a.json", "{}");
    EXPECT_THROW(w.write("../escape", "x"), std::invalid_argument);
    EXPECT_THROW(w.write("/abs", "x"), std::invalid_argument);
    w.write_manifest("hash");
    std::ifstream in(dir / "manifest.json");
    const auto doc = nlohmann::json::parse(in);
    EXPECT_EQ(doc["config_sha256"], "hash");
    EXPECT_FALSE(doc.contains("wall_clock_seconds"));
    ASSERT_EQ(doc["artifacts"].size(), 2u);
    EXPECT_EQ(doc["artifacts"][0]["name"], "sub/a.json");
    EXPECT_EQ(doc["artifacts"][1]["sha256"], sha256_hex("1\n"));
    std::filesystem::remove_all(dir);
}
