#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "cslab/grid.hpp"
#include "cslab/kernels.hpp"
#include "cslab/scaling_spec.hpp"

namespace cslab {

/// n particles of equal mass in R^N.
struct ParticleEnsemble {
    int dim = 1;
    std::vector<Vec> positions;
    std::vector<Vec> velocities;
    double weight = 1.0;
    double time = 0.0;
    /// Number of completed steps; keys the noise stream.
    std::uint64_t step = 0;

    std::size_t size() const { return positions.size(); }
    double total_mass() const { return weight * static_cast<double>(positions.size()); }
    /// Throws DomainError on empty ensembles, non-positive weight or non-finite coordinates.
    void validate() const;
};

/// Uniform samples in [-pos_half, pos_half]^N x [-vel_half, vel_half]^N with total mass `mass`.
ParticleEnsemble sample_uniform_ensemble(std::size_t n, int dim, double mass, double pos_half,
                                         double vel_half, std::uint64_t stream_key);

// Friction variants: the force is -mu(v) v.
struct FrictionNone {};
struct FrictionLinear {
    double mu = 1.0;
};
/// mu(v) = beta |v|^k - alpha.
struct FrictionGeneralized {
    double alpha = 0.0;
    double beta = 1.0;
    double k = 2.0;
};
using FrictionSpec = std::variant<FrictionNone, FrictionLinear, FrictionGeneralized>;

double friction_rate(const FrictionSpec& f, double speed);

// External potentials psi(t, x); the force is -grad psi.
struct PotentialZero {};
/// psi = stiffness |x|^2 / 2.
struct PotentialQuadratic {
    double stiffness = 1.0;
};
/// psi = -depth exp(-|x|^2 / (2 width^2)).
struct PotentialGaussianWell {
    double depth = 1.0;
    double width = 1.0;
};
/// psi = slope . x
struct PotentialUniformShear {
    Vec slope{0.0, 0.0, 0.0};
};
using PotentialSpec = std::variant<PotentialZero, PotentialQuadratic, PotentialGaussianWell, PotentialUniformShear>;

double potential_value(const PotentialSpec& p, double t, const Vec& x);
Vec potential_gradient(const PotentialSpec& p, double t, const Vec& x);

/// Alignment kernels; KernelNone switches interactions off.
struct KernelNone {};
struct KernelClassical {
    double lambda = 0.25;
};
using InteractionKernel = std::variant<KernelNone, KernelClassical, KernelParams, DimensionalKernelParams>;

enum class ModelKind { cucker_smale, motsch_tadmor, langevin, scaled };

struct StepControls {
    /// Reject a step if |v_new| > growth * max(|v_old|, velocity_floor).
    double max_velocity_growth = 10.0;
    double velocity_floor = 1.0;
    /// Abort if any |x_c| exceeds this.
    double safety_box = 1.0e3;
    /// Scaled runs need dt <= stiffness_fraction * eps^(1 + gamma).
    double stiffness_fraction = 0.05;
};

struct ModelSpec {
    ModelKind model = ModelKind::cucker_smale;
    InteractionKernel kernel = KernelClassical{};
    FrictionSpec friction = FrictionNone{};
    PotentialSpec potential = PotentialZero{};
    double diffusion = 0.0;
    /// Particle mass on the left of the Langevin velocity equation.
    double particle_mass = 1.0;
    /// Interaction strength of the Motsch–Tadmor system.
    double alignment_strength = 1.0;
    std::uint64_t seed = 0;
    StepControls controls{};

    /// Throws ConfigError on combinations the model does not admit.
    void validate() const;
};

struct FlockingDiagnostics {
    double position_diameter = 0.0;
    double velocity_diameter = 0.0;
    Vec mean_velocity{0.0, 0.0, 0.0};
    double kinetic_fluctuation = 0.0;
};

/// Classical RK4 step of the Cucker–Smale system.
ParticleEnsemble step_cucker_smale(const ParticleEnsemble& state, const ModelSpec& spec, double dt);
/// Classical RK4 step of the Motsch–Tadmor system.
ParticleEnsemble step_motsch_tadmor(const ParticleEnsemble& state, const ModelSpec& spec, double dt);
/// Euler–Maruyama step of the Langevin system.
ParticleEnsemble step_langevin(const ParticleEnsemble& state, const ModelSpec& spec, double dt);
/// Euler–Maruyama step of a scaled system; the kernel is phi_eps with the scaling's lambda.
/// When `alignment_out` is given it receives w sum_j phi_ij (v_j - v_i) at the pre-step state.
ParticleEnsemble step_scaled(const ParticleEnsemble& state, const ScalingSpec& scaling,
                             const ModelSpec& spec, double dt, std::vector<Vec>* alignment_out = nullptr);
/// Dispatches on spec.model; `scaling` is used only by the scaled model.
ParticleEnsemble step_model(const ParticleEnsemble& state, const ModelSpec& spec,
                            const ScalingSpec& scaling, double dt);

FlockingDiagnostics flocking_diagnostics(const ParticleEnsemble& state);

/// a_i = w sum_j phi(|x_i - x_j|) (v_j - v_i) for every particle.
std::vector<Vec> alignment_field(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim,
                                 double weight, const InteractionKernel& kernel);

/**
 * @brief Coefficients of the generic Euler–Maruyama drift
 *
 * dx = position_rate v dt
 * dv = [-friction_scale mu(v) v + alignment_scale a - force_scale grad psi] dt + noise dW
 */
struct SdeCoefficients {
    double position_rate = 1.0;
    double friction_scale = 1.0;
    FrictionSpec friction = FrictionNone{};
    double alignment_scale = 1.0;
    double force_scale = 1.0;
    double noise = 0.0;
};

SdeCoefficients scaled_coefficients(const ScalingSpec& scaling);

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& state, const InteractionKernel& kernel,
                                     const SdeCoefficients& coeffs, const PotentialSpec& potential,
                                     std::uint64_t noise_key, const StepControls& controls, double dt,
                                     std::vector<Vec>* alignment_out = nullptr);

}  // namespace cslab
