#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cslab/grid.hpp"
#include "cslab/kernels.hpp"
#include "cslab/particles.hpp"
#include "cslab/scaling_spec.hpp"

namespace cslab {

/// Number of unique entries of a symmetric N x N tensor: 1, 3, 6.
std::size_t sym_count(int dim);
std::size_t sym_index(int a, int b, int dim);
/// Number of unique entries of a fully symmetric rank-3 tensor: 1, 4, 10.
std::size_t triple_count(int dim);
std::size_t triple_index(int a, int b, int c, int dim);

/// Gridded velocity moments of an ensemble at one time.
struct MomentFields {
    GridSpec grid;
    double time = 0.0;
    Field rho;              ///< density
    Field current;          ///< j, dim components
    Field stress;           ///< S, compressed symmetric
    Field stress_flux;      ///< T, compressed symmetric rank 3
    Field energy;           ///< E = tr(S) / 2
    Field energy_kinetic;   ///< min(|j|^2 / (2 rho), E)
    Field energy_internal;  ///< E - E_kin
    Field energy_flux;      ///< Q_a = sum_b T_abb / 2
    /// Deposits of |v|^k v and |v|^k v (x) v, present when a friction exponent was requested.
    std::optional<Field> friction_current;
    std::optional<Field> friction_stress;
    /// Mass whose deposition stencil fell outside the grid.
    double escaped_mass = 0.0;
};

struct DepositionOptions {
    /// Width of the quadratic B-spline in grid cells.
    double bandwidth = 1.0;
    std::optional<double> friction_exponent;
};

MomentFields empirical_moments(const ParticleEnsemble& state, const GridSpec& grid,
                               const DepositionOptions& options);
MomentFields empirical_moments(const ParticleEnsemble& state, const GridSpec& grid, double bandwidth);

/// u = j / rho on nodes with rho > floor, zero elsewhere.
Field velocity_on_support(const MomentFields& m, double rho_floor);

/// sum_{i != j} w^2 phi_eps(|x_i - x_j|) |v_i - v_j|^2.
double dissipation_rate(const ParticleEnsemble& state, const KernelParams& params);

struct ConvolvedFields {
    Field phi_conv_rho;
    Field phi_conv_j;
};
ConvolvedFields convolved_fields(const MomentFields& m, const KernelParams& params);

/// (phi * j) rho - (phi * rho) j at every node.
Field commutator_field(const MomentFields& m, const KernelParams& params);

/// (1/2) sum_{i,j} w^2 phi_ij (g(x_i) - g(x_j)) . (v_j - v_i).
double weak_commutator_form(const ParticleEnsemble& state, const VectorTestFunction& g,
                            const KernelParams& params);
/// sum_{i,j} w^2 phi_ij g(x_i) . (v_j - v_i).
double weak_commutator_form_unsymmetrized(const ParticleEnsemble& state, const VectorTestFunction& g,
                                          const KernelParams& params);

struct NearDiagonal {
    double mass = 0.0;      ///< sum_{|x_i - x_j| < R} w^2 |v_i - v_j|
    double weighted = 0.0;  ///< same sum with phi^(1/2) weights
    double majorant = 0.0;  ///< (eps^2 + c R^2)^(lambda/2) * weighted
};
NearDiagonal near_diagonal(const ParticleEnsemble& state, double radius, const KernelParams& params);
double near_diagonal_mass(const ParticleEnsemble& state, double radius, const KernelParams& params);

/**
 * @brief All pair-sum diagnostics of one snapshot, in one O(n^2) pass.
 */
struct PairStatistics {
    double dissipation = 0.0;
    /// (k/2) sum w^2 phi (|v_i|^(k-2) v_i - |v_j|^(k-2) v_j) . (v_i - v_j) for k = 1, 2, 3.
    double pairing[3] = {0.0, 0.0, 0.0};
    /// Total variation of (phi * rho) j - (phi * j) rho for the empirical measure.
    double commutator_tv = 0.0;
    std::vector<double> weak_forms;
    std::vector<NearDiagonal> near;
};
PairStatistics pair_statistics(const ParticleEnsemble& state, const KernelParams& params,
                               const std::vector<VectorTestFunction>& tests,
                               const std::vector<double>& radii);

/// Coefficients of the moment balance laws of one scaled system.
struct BalanceCoefficients {
    double mass_flux = 1.0;  ///< a_m in d_t rho + a_m div j = 0
    double time = 1.0;       ///< c_t
    double transport = 1.0;  ///< c_s
    double force = 1.0;      ///< c_psi
    double diffusion = 1.0;  ///< d
    bool linear_friction = true;
    bool generalized_friction = false;
    double alpha = 0.0;
};
BalanceCoefficients balance_coefficients(const ScalingSpec& scaling);

struct ResidualNorms {
    double sup = 0.0;
    double l1 = 0.0;
};
struct BalanceReport {
    std::string scaling;
    ResidualNorms mass, current, stress, energy;
    std::size_t levels_checked = 0;
};

/// Centered-difference residuals of the mass, current, stress and energy balances.
BalanceReport balance_residuals(const std::vector<MomentFields>& series, const ScalingSpec& scaling,
                                const PotentialSpec& potential);

struct GlobalMoments {
    double time = 0.0;
    double velocity = 0.0;  ///< sum w |v_i|^k
    double position = 0.0;  ///< sum w |x_i|^k
};
std::vector<GlobalMoments> global_moment_series(const std::vector<ParticleEnsemble>& trajectory, int k);

/// Trapezoid rule over (t_i, y_i).
double trapezoid(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace cslab
