#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cslab/commands.hpp"

using namespace cslab;
namespace fs = std::filesystem;

namespace {

class CommandTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("cslab_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    int run(const std::string& command, const std::string& text, const std::string& out, int jobs = 1) {
        const auto cfg = root_ / "config.ini";
        std::ofstream(cfg) << text;
        CommandOptions opt;
        opt.out = root_ / out;
        opt.jobs = jobs;
        log_.str("");
        return run_command(command, cfg, opt, log_);
    }

    std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path root_;
    std::ostringstream log_;
};

const char* kMinimalSimulation = R"(schema_version = 1
seed = 3
[model]
kind = cucker_smale
kernel = classical
lambda = 0.25
particles = 1
dim = 2
horizon = 0.01
dt = 0.01
)";

}  // namespace

TEST_F(CommandTest, MinimalSimulationWritesTwoRows) {
    EXPECT_EQ(run("simulate", kMinimalSimulation, "a"), kExitOk);
    const std::string traj = slurp(root_ / "a" / "trajectory.csv");
    EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 3);
    EXPECT_TRUE(fs::exists(root_ / "a" / "manifest.json"));
}

TEST_F(CommandTest, InadmissibleLambdaIsConfigError) {
    std::string text = kMinimalSimulation;
    text.replace(text.find("kernel = classical"), 18, "kernel = scaled\nepsilon = 0.1");
    text.replace(text.find("lambda = 0.25"), 13, "lambda = 1");
    EXPECT_EQ(run("simulate", text, "b"), kExitConfig);
    EXPECT_NE(log_.str().find("lambda"), std::string::npos) << log_.str();
}

TEST_F(CommandTest, RerunGivesIdenticalManifest) {
    std::string text = kMinimalSimulation;
    text.replace(text.find("particles = 1"), 13, "particles = 300");
    text.replace(text.find("horizon = 0.01"), 14, "horizon = 0.2");
    ASSERT_EQ(run("simulate", text, "r", 1), kExitOk);
    const std::string manifest = slurp(root_ / "r" / "manifest.json");
    const std::string trajectory = slurp(root_ / "r" / "trajectory.csv");
    ASSERT_EQ(run("simulate", text, "r", 4), kExitOk);
    EXPECT_EQ(slurp(root_ / "r" / "manifest.json"), manifest);
    EXPECT_EQ(slurp(root_ / "r" / "trajectory.csv"), trajectory);
}

TEST_F(CommandTest, VerifyWithZeroSamplesPasses) {
    EXPECT_EQ(run("verify", "schema_version = 1\n[verify]\nkernel_samples = 0\n", "v"), kExitOk);
}

TEST_F(CommandTest, FaultyKernelReportsWitness) {
    EXPECT_EQ(run("verify", "schema_version = 1\n[verify]\nkernel_samples = 1000\nkernel_c_factor = 0.5\n", "f"),
              kExitVerdict);
    const std::string report = slurp(root_ / "f" / "verify.json");
    EXPECT_NE(report.find("lambda"), std::string::npos);
}

TEST_F(CommandTest, SweepWithoutVerdictsPasses) {
    const char* text = R"(schema_version = 1
[scaling]
kind = hyperbolic
lambda = 0.25
[sweep]
eps = 0.4
seeds = 1
particles = 20
horizon = 0.05
)";
    EXPECT_EQ(run("sweep", text, "s"), kExitOk);
    EXPECT_TRUE(fs::exists(root_ / "s" / "report.json"));
}

TEST_F(CommandTest, UnderstatedBudgetFails) {
    const char* text = R"(schema_version = 1
seed = 5
[scaling]
kind = hyperbolic
lambda = 0.25
[sweep]
eps = 0.4
seeds = 1
particles = 200
velocity_half_width = 20
horizon = 0.5
e0_scale = 0.1
bounds = energy_bound, dissipation_bound
)";
    EXPECT_EQ(run("sweep", text, "u"), kExitVerdict);
    EXPECT_NE(slurp(root_ / "u" / "verdicts.csv").find("energy_bound"), std::string::npos);
}

TEST_F(CommandTest, MacroTrivialCases) {
    EXPECT_EQ(run("solve-macro", "schema_version = 1\n[macrosolver]\nrho0 = zero\n", "z"), kExitOk);
    EXPECT_EQ(run("solve-macro", "schema_version = 1\n[macrosolver]\npotential = zero\n", "p"), kExitOk);
}

TEST_F(CommandTest, MissingSectionAndUnknownCommand) {
    EXPECT_EQ(run("simulate", "schema_version = 1\n", "m"), kExitConfig);
    EXPECT_EQ(run("unknown", kMinimalSimulation, "n"), kExitConfig);
}
