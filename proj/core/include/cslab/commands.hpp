#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cslab/config.hpp"
#include "cslab/scalings.hpp"

namespace cslab {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitRuntime = 3,
    kExitVerdict = 4,
    kExitNonContraction = 5,
};

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    int jobs = 1;
};

/// Result of one property suite: the number of checked inequalities and the first violation.
struct SuiteResult {
    std::string name;
    std::size_t samples = 0;
    std::size_t violations = 0;
    std::string witness;
    /// Named scalar summaries (worst ratios, errors), ordered by name.
    std::map<std::string, double> metrics;

    bool pass() const { return violations == 0; }
};

/// Random (r, eps, lambda) samples against the three kernel bounds; `c_factor` rescales c_lambda in the
/// kernel under test and exists to exercise the failure path.
SuiteResult kernel_bound_suite(std::size_t samples, std::uint64_t seed, double c_factor = 1.0,
                               double tolerance = 1e-12);
/// phi_1(1) = 1/2 for random lambda.
SuiteResult defining_property_suite(std::size_t samples, std::uint64_t seed, double c_factor = 1.0,
                                    double tolerance = 1e-12);
/// Bounds of phi_eps(|x - y|)(g(x) - g(y)) for the test dictionary at random points.
SuiteResult h_kernel_suite(std::size_t samples, std::uint64_t seed, double tolerance = 1e-12);
/// u = x on [-8, 8]: closed-form error, L^p growth bounds and Jacobian bounds at t = 1.
SuiteResult transport_suite(std::size_t nodes = 2048, double dt = 1e-3);
/// u = sin x at t = 0.5: exp(logJ) against the finite-difference derivative of the backtraced map.
SuiteResult liouville_suite(std::size_t probes = 512, std::uint64_t seed = 0);
/// Constant u gives zero and u + c gives the same commutator.
SuiteResult commutator_nullity_suite(std::uint64_t seed = 0, std::size_t shifts = 8);
/// Dilation and amplitude family: ratio spread and amplitude invariance.
SuiteResult commutator_ratio_suite(const SolverConfig& cfg, double spread_limit = 10.0,
                                   double invariance_tol = 1e-10);

/// Verdicts requested by a sweep section, already filtered and aggregated.
std::vector<Verdict> sweep_verdicts(const SweepReport& report, const SweepChecks& checks);

/// Commands take a validated config with overrides applied and return an exit code; they throw
/// ConfigError and runtime errors, which run_command maps to exit codes.
int cmd_simulate(const ExperimentConfig& config, std::ostream& log);
int cmd_sweep(const ExperimentConfig& config, std::ostream& log);
int cmd_solve_macro(const ExperimentConfig& config, std::ostream& log);
int cmd_verify(const ExperimentConfig& config, std::ostream& log);

/// Loads the config, applies overrides and runs the named command with exit-code mapping.
int run_command(const std::string& command, const std::filesystem::path& config_path, const CommandOptions& options,
                std::ostream& log);

}  // namespace cslab
