#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cslab/grid.hpp"
#include "cslab/macrosolver.hpp"
#include "cslab/particles.hpp"
#include "cslab/scaling_spec.hpp"
#include "cslab/scalings.hpp"

namespace cslab {

inline constexpr int kSchemaVersion = 1;

/// One particle simulation: model plus initial data and time stepping.
struct SimulationSection {
    ModelSpec model;
    /// Used only when model.model is ModelKind::scaled.
    ScalingSpec scaling;
    std::size_t particles = 64;
    int dim = 2;
    double mass = 1.0;
    double position_half_width = 1.0;
    double velocity_half_width = 1.0;
    double horizon = 1.0;
    double dt = 1e-2;
    /// Trajectory rows are written every `record_every` steps and at the last step.
    std::size_t record_every = 1;
};

/// Which sweep verdicts decide the exit status.
struct SweepChecks {
    /// Name prefixes of a priori bound verdicts; "all" selects every bound.
    std::vector<std::string> bounds;
    /// Verdicts pass when every seed passes, or when any seed does.
    bool require_all_seeds = true;
    bool friction_hypotheses = false;
    /// Decay-rate fit of a named run quantity with a minimum slope.
    std::optional<std::string> fit_quantity;
    double fit_min_slope = 0.0;
    /// Strict decrease of Theta and q - j over the last `monotone_points` eps values.
    bool rh_limit = false;
    std::size_t monotone_points = 4;
    VerifyOptions options;
};

struct SweepSection {
    SweepConfig config;
    SweepChecks checks;
    bool write_series = true;
};

enum class DensityShape { zero, gaussian };

struct MacroSection {
    SolverConfig solver;
    PotentialSpec potential = PotentialQuadratic{0.05};
    DensityShape shape = DensityShape::gaussian;
    double rho0_mass = 0.01;
    double rho0_width = 0.5;
    /// Time levels written to the field CSV: every `field_stride`-th plus the last.
    std::size_t field_stride = 10;

    Field initial_density() const;
};

struct VerifySection {
    std::size_t kernel_samples = 0;
    std::size_t defining_samples = 0;
    std::size_t h_kernel_samples = 0;
    bool transport = false;
    bool liouville = false;
    bool commutator = false;
    bool commutator_ratios = false;
    /// Test hook: multiplies c_lambda inside the kernel under test; 1 is the correct kernel.
    double kernel_c_factor = 1.0;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    /// Adds elapsed seconds to the manifest, which then differs between reruns.
    bool record_wall_clock = false;
    std::optional<SimulationSection> simulation;  ///< [model]
    std::optional<SweepSection> sweep;            ///< [scaling] + [sweep] + [grid]
    std::optional<MacroSection> macro;            ///< [macrosolver]
    std::optional<VerifySection> verify;          ///< [verify]

    /// Cross-field validation of every present section; throws ConfigError.
    void validate() const;
};

/// Sectioned key = value text; '#' and ';' start comment lines.
ExperimentConfig parse_config_text(const std::string& text);
/// JSON object with the same sections as nested objects and lists as arrays.
ExperimentConfig parse_config_json(const std::string& text);
/// Chooses the parser by extension (.json) and reads the file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical key = value text; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

}  // namespace cslab
