#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cslab/grid.hpp"
#include "cslab/kernels.hpp"
#include "cslab/moments.hpp"
#include "cslab/particles.hpp"
#include "cslab/scaling_spec.hpp"

namespace cslab {

/// Physical constants of the dimensional kinetic model and its characteristic units.
struct PhysicalConstants {
    double mu = 1.0;     ///< thermal velocity variance
    double tau = 1.0;    ///< relaxation time
    double sigma = 1.0;  ///< interaction range
    double K = 1.0;      ///< interaction strength
    double m = 1.0;      ///< particle mass
    double M = 1.0;      ///< characteristic mass
    double T = 1.0;      ///< time unit
    double R = 1.0;      ///< length unit
    double V = 1.0;      ///< velocity unit
    double psi0 = 1.0;   ///< potential unit
    double f0 = 1.0;     ///< distribution unit
    int dim = 1;
};

struct DimensionlessParameters {
    double alpha = 1.0;
    double beta = 1.0;
    double velocity = 1.0;  ///< thermal velocity ratio
    double mass = 1.0;
    double delta = 1.0;     ///< interaction range
    double strength = 1.0;  ///< interaction strength
};

/// Throws ConfigError on non-positive constants and InconsistencyError when the unit linkage fails.
DimensionlessParameters derive_scaling_preset(const PhysicalConstants& c);

/// Parameter choice that produces the given scaled system, with strength eps^(-2 lambda).
DimensionlessParameters scaling_preset(ScalingKind kind, double epsilon, double gamma, double lambda);

/**
 * @brief Coefficients of the dimensionless kinetic equation, normalized so friction is 1
 *
 * time d_t f + transport v.grad_x f - force grad psi.grad_v f
 *   = div_v(friction f v + diffusion grad_v f + alignment Q[phi_range])
 */
struct KineticCoefficients {
    double time = 1.0;
    double transport = 1.0;
    double force = 1.0;
    double friction = 1.0;
    double diffusion = 1.0;
    double alignment = 1.0;  ///< multiplies (range^2 + c r^2)^(-lambda)
    double range = 1.0;
};
KineticCoefficients kinetic_coefficients(const DimensionlessParameters& p, double lambda, bool with_friction = true);

struct HypothesisBudget {
    double M0 = 0.0;  ///< total mass
    double E0 = 0.0;  ///< initial kinetic energy, sum w |v|^2 / 2
    double F0 = 0.0;  ///< L2-in-time of the sup of |grad psi| over the trajectory
    double S0 = 0.0;  ///< initial second spatial moment
    double T = 0.0;
};

/// Smooth vector test functions used to probe weak convergence: 8 Gaussians and weighted Gaussians.
std::vector<VectorTestFunction> default_test_dictionary(int dim);

struct SweepConfig {
    /// Kind, gamma, lambda and the friction laws; epsilon is set per run.
    ScalingSpec scaling;
    std::vector<double> eps_list{0.4, 0.283, 0.2, 0.141, 0.1, 0.071, 0.05};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    /// Supplies the potential and step controls.
    ModelSpec model;
    std::size_t particles = 2000;
    int dim = 1;
    double mass = 1.0;
    double position_half_width = 1.0;
    double velocity_half_width = 1.0;
    double horizon = 2.0;
    /// dt is the largest T / steps not above dt_fraction * eps^(1 + gamma).
    double dt_fraction = 0.05;
    std::size_t snapshots = 21;
    /// Deposition grid for q - j in generalized-friction sweeps.
    GridSpec grid = make_cube_grid(1, 4.0, 129);
    double bandwidth = 1.0;
    std::vector<double> radii{0.05, 0.1, 0.2};
    std::vector<VectorTestFunction> tests;
    /// Multiplies the recorded E0; values other than 1 exist to exercise failing verdicts.
    double e0_scale = 1.0;

    void validate() const;
};

/// Quantities recorded at every step of one run, all mass weighted sums over particles.
struct StepSeries {
    std::vector<double> time;
    std::vector<double> dissipation;    ///< sum w^2 phi |v_i - v_j|^2
    std::vector<double> commutator_tv;  ///< total variation of (phi * rho) j - (phi * j) rho
    std::vector<double> m1, m2, m3;     ///< sum w |v|^p
    std::vector<double> mk1, mk2;       ///< sum w |v|^(k+1), sum w |v|^(k+2)
    std::vector<double> m_inv;          ///< sum w / |v|, only for dim >= 2
    std::vector<double> force1, force2, force3;  ///< sum w |v|^(p-1) |grad psi|
    std::vector<double> grad_sup;       ///< max |grad psi(x_i)|
    std::vector<double> theta;          ///< sum w ||v|^k - 1| |v|
    std::vector<double> test_integral;  ///< sum w exp(-|x|^2 / 2)

    std::size_t size() const { return time.size(); }
    /// (name, column) pairs in output order.
    std::vector<std::pair<std::string, const std::vector<double>*>> columns() const;
};

struct SnapshotRecord {
    std::size_t step = 0;
    double time = 0.0;
    PairStatistics pairs;
    double q_minus_j = 0.0;  ///< L1 norm of the deposited |v|^k v - v
    double escaped_mass = 0.0;
};

struct RunRecord {
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double k = 0.0;
    double alpha = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    /// Rate of dx = rate v dt.
    double position_rate = 1.0;
    HypothesisBudget budget;
    double initial_m1 = 0.0, initial_m2 = 0.0, initial_m3 = 0.0;
    StepSeries series;
    std::vector<SnapshotRecord> snapshots;

    double integrated_dissipation() const;
    /// L2-in-time, L1-in-space norm of the commutator.
    double commutator_l2l1() const;
};

struct SweepReport {
    ScalingSpec scaling;
    int dim = 1;
    double horizon = 0.0;
    std::vector<double> eps_list;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> test_names;
    std::vector<double> radii;
    /// Ordered by epsilon, then seed.
    std::vector<RunRecord> runs;

    const RunRecord& run(std::size_t eps_index, std::size_t seed_index) const;
    ScalingSpec scaling_at(double epsilon) const;
};

/// Simulates every (eps, seed) pair; errors propagate with the offending eps in the message.
SweepReport run_sweep(const SweepConfig& config);

struct Verdict {
    std::string name;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    double slack() const { return rhs * (1.0 + tolerance) - lhs; }
};
Verdict make_verdict(std::string name, double epsilon, std::uint64_t seed, double lhs, double rhs, double tolerance);

struct VerifyOptions {
    double mc_tol = 0.1;
    /// Largest allowed max/min ratio of a scaled moment across the sweep.
    double boundedness_factor = 10.0;
    /// Tolerance of inequalities that hold exactly for every sample.
    double exact_tol = 1e-12;
};

/// Bound checks of one report, one verdict per (bound, eps, seed).
std::vector<Verdict> verify_apriori_bounds(const SweepReport& report, const VerifyOptions& options);

/// Keeps one verdict per (name, eps): it passes if any seed passes and carries the seed with the most slack.
std::vector<Verdict> aggregate_over_seeds(const std::vector<Verdict>& verdicts);

/// The five scaled moments of a generalized-friction run.
struct ScaledMoments {
    double epsilon = 0.0;
    double top = 0.0;              ///< eps^(-2g) || |v|^(k+2) f ||_{L1 L1}
    double friction_current = 0.0; ///< eps^(-g) || |v|^(k+1) f ||_{L^r L1}
    double energy = 0.0;           ///< eps^(-2g) || |v|^2 f ||_{L1 L1}
    double current = 0.0;          ///< eps^(-g) || |v| f ||_{L2 L1}
    double dissipation = 0.0;      ///< eps^(-2g) int D dt
};
/// Seed averages per eps.
std::vector<ScaledMoments> scaled_moments(const SweepReport& report);

/// Largest eps such that 1 - (alpha + 1/2) 2 / (2 + k) >= 1/4 on all of (0, eps].
double prefactor_threshold(const ScalingSpec& scaling);

/// Numerical checks of the friction-law hypotheses on the sweep's eps list.
std::vector<Verdict> check_friction_hypotheses(const ScalingSpec& scaling, const std::vector<double>& eps_list);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
/// Least squares of log y against log x. Throws DegenerateFitError on non-positive values.
DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

using RunQuantity = std::function<double(const RunRecord&)>;
/// Named selectors: commutator_l2l1, dissipation, theta, q_minus_j.
RunQuantity run_quantity(const std::string& name, const SweepReport& report);

/// Seed-averaged quantity against eps. Needs >= min_points eps values spanning a factor >= min_span.
DecayFit fit_decay_rate(const SweepReport& report, const RunQuantity& quantity, std::size_t min_points = 4,
                        double min_span = 5.0);

struct CauchyRow {
    double eps_a = 0.0;
    double eps_b = 0.0;
    std::vector<double> deviations;  ///< per test function
};
/// Time-integrated weak commutator forms, seed averaged, compared between consecutive runs.
std::vector<CauchyRow> commutator_cauchy_test(const SweepReport& report);
/// eps^(-g) int W(g) dt for one run and test index.
double integrated_weak_form(const RunRecord& run, std::size_t test, double gamma);

struct RhLimitRow {
    double epsilon = 0.0;
    double k = 0.0;
    double theta = 0.0;
    double q_minus_j = 0.0;  ///< eps^(-g) int ||q - j||_{L1} dt
    std::vector<double> q_minus_j_series;
    double p = 0.0, q = 0.0, r = 0.0;
};
/// Seed averages per eps. Throws ConfigError unless the report is a generalized-friction sweep.
std::vector<RhLimitRow> rh_limit_quantities(const SweepReport& report);

/// Theta of one ensemble: sum w ||v|^k - 1| |v|.
double theta_integrand(const ParticleEnsemble& state, double k);

}  // namespace cslab
