#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cslab/grid.hpp"
#include "cslab/kernels.hpp"
#include "cslab/particles.hpp"

namespace cslab {

/// Cached spatial norms of one time level.
struct LevelNorms {
    double sup = 0.0;       ///< max |u|
    double grad_sup = 0.0;  ///< max over nodes of the summed |d_a u_b|
    double l_low = 0.0;     ///< L^(k p1)
    double l_high = 0.0;    ///< L^(k p2)
};

/**
 * @brief Time-dependent vector field on a grid, uniform in time.
 *
 * Evaluation is multilinear in x and linear in t. Norms and the centered
 * divergence are computed once at construction.
 */
class VelocityField {
public:
    VelocityField(GridSpec grid, double dt, std::vector<Field> levels, double low_exponent = 2.0,
                  double high_exponent = 8.0);

    const GridSpec& grid() const { return grid_; }
    double dt() const { return dt_; }
    std::size_t level_count() const { return levels_.size(); }
    double time(std::size_t m) const { return dt_ * static_cast<double>(m); }
    double horizon() const { return time(levels_.size() - 1); }
    const Field& level(std::size_t m) const { return levels_[m]; }
    const Field& divergence_level(std::size_t m) const { return div_[m]; }
    const LevelNorms& norms(std::size_t m) const { return norms_[m]; }
    double low_exponent() const { return low_; }
    double high_exponent() const { return high_; }

    Vec value(double t, const Vec& x) const;
    double divergence(double t, const Vec& x) const;
    /// Trapezoid in time of sup|u| + grad_sup, the discrete L1(0, T; W^{1, inf}) norm.
    double l1_w1inf() const;
    /// Same norm over [0, time(last_level)].
    double l1_w1inf(std::size_t last_level) const;
    /// Recomputes the norms of level m.
    LevelNorms recompute_norms(std::size_t m) const;

private:
    GridSpec grid_;
    double dt_;
    std::vector<Field> levels_;
    std::vector<Field> div_;
    std::vector<LevelNorms> norms_;
    double low_, high_;
};

/// Samples u(t, x) on every level t_m = m dt, m = 0..levels-1.
template <class Fn>
VelocityField sample_velocity(const GridSpec& grid, double dt, std::size_t levels, Fn&& fn,
                              double low_exponent = 2.0, double high_exponent = 8.0) {
    std::vector<Field> out;
    out.reserve(levels);
    for (std::size_t m = 0; m < levels; ++m) {
        const double t = dt * static_cast<double>(m);
        out.push_back(sample_vector(grid, static_cast<std::size_t>(grid.dim), [&](const Vec& x) { return fn(t, x); }));
    }
    return VelocityField(grid, dt, std::move(out), low_exponent, high_exponent);
}

/// Nonnegative densities on the time levels of a velocity field.
struct DensityField {
    GridSpec grid;
    double dt = 0.0;
    /// Level index of each entry of `values`.
    std::vector<std::size_t> levels;
    std::vector<Field> values;

    double mass(std::size_t i) const { return integrate(grid, values[i]); }
};

struct Backtrace {
    Vec x0{0.0, 0.0, 0.0};
    double log_jacobian = 0.0;
};

/// RK4 along dX/ds = u(s, X) from (t, x) back to s = 0, with logJ = -int_0^t div u(s, X(s)) ds.
/// Throws DomainExitError when the characteristic leaves the grid box.
Backtrace flow_backtrace(const VelocityField& u, double t, const Vec& x);

enum class ExitPolicy {
    error,         ///< propagate DomainExitError
    zero_density,  ///< characteristics entering from outside carry no mass
};

/// rho(t_m, x) = rho0(X(0; t_m, x)) J(0; t_m, x) at the given levels (all levels when empty).
DensityField transport_pushforward(const Field& rho0, const VelocityField& u,
                                   const std::vector<std::size_t>& levels = {},
                                   ExitPolicy policy = ExitPolicy::error);

/**
 * @brief Singular commutator -c^(-lambda) int (u(x) - u(y)) |x - y|^(-2 lambda) rho(y) dy
 *
 * Equals (phi_0 * (rho u)) - (phi_0 * rho) u. Built once per grid and exponent.
 */
class CommutatorOperator {
public:
    CommutatorOperator(const GridSpec& grid, double lambda);
    Field apply(const Field& rho, const Field& u) const;
    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_;
    ConvolutionWeights weights_;
};

Field commutator_apply(const Field& rho, const Field& u, double lambda, const GridSpec& grid);

/// Sum over all derivatives of order <= order of their discrete L^p norms (centered differences).
double sobolev_norm(const Field& f, int order, double p, const GridSpec& grid);
/// ||f||_{W^{k-1,p}} + ||f||_{W^{k-1,q}} + ||f||_{W^{k,inf}}.
double norm_wkpq(const Field& f, int k, double p, double q, const GridSpec& grid);

struct SolverConfig {
    double lambda = 0.25;
    double p1 = 1.2;
    double p2 = 8.0;
    int k = 2;
    double mu = 1.0;
    double ball_radius = 1.0;
    double tolerance = 1e-10;
    int max_iterations = 30;
    GridSpec grid = make_cube_grid(1, 4.0, 257);
    double horizon = 1.0;
    double dt = 0.02;

    /// Throws ConfigError when the exponent window, the k floor or the grid are violated.
    void validate() const;
    std::size_t level_count() const;
    double low_exponent() const { return k * p1; }
    double high_exponent() const { return k * p2; }
};

struct PicardIteration {
    int index = 0;
    double norm = 0.0;        ///< iteration norm of u^(m+1)
    double difference = 0.0;  ///< iteration norm of u^(m+1) - u^(m)
    double ratio = 0.0;       ///< difference / previous difference (0 for the first)
    bool in_ball = true;
};

struct PicardReport {
    std::vector<PicardIteration> iterations;
    bool converged = false;
    bool all_in_ball = true;
    double max_ratio = 0.0;
    double continuity_residual = 0.0;  ///< sup of d_t rho + div(rho u)
    double closure_residual = 0.0;     ///< sup of rho grad psi + mu rho u - rho C[rho, u]
    double mass_drift = 0.0;           ///< max relative change of the mass over the levels
};

struct PicardResult {
    VelocityField u;
    DensityField rho;
    PicardReport report;
};

/// Raised when the contraction ratio exceeds 1 three times in a row or an iterate leaves the ball.
class PicardFailure : public std::runtime_error {
public:
    enum class Kind { non_contraction, ball_exit };
    PicardFailure(const std::string& what, Kind kind, PicardReport report)
        : std::runtime_error(what), kind_(kind), report_(std::move(report)) {}
    Kind kind() const noexcept { return kind_; }
    const PicardReport& report() const noexcept { return report_; }

private:
    Kind kind_;
    PicardReport report_;
};

/// L1-in-time of the W^{1, kp1, kp2} norm, the norm the fixed-point map contracts in.
double iteration_norm(const VelocityField& u, const SolverConfig& cfg);

/// u <- (C[D[u], u] - grad psi) / mu from u = -grad psi / mu; throws ConfigError for mu = 0.
PicardResult picard_solve(const Field& rho0, const PotentialSpec& potential, const SolverConfig& cfg);

struct SmallnessReport {
    double grad_psi_norm = 0.0;
    double rho0_norm = 0.0;
    double theta_low = 0.0;   ///< exponent on ||rho||_{p1}
    double theta_high = 0.0;  ///< exponent on ||rho||_{p2}
    std::string verdict = "advisory only";
};
/// Interpolation exponents of the commutator bounds for (lambda, p1, p2, N).
std::pair<double, double> interpolation_exponents(double lambda, double p1, double p2, int dim);
SmallnessReport check_smallness(const Field& rho0, const PotentialSpec& potential, const SolverConfig& cfg);

struct CommutatorSample {
    std::string label;
    Field rho;
    Field u;
};

struct CommutatorRatio {
    std::string label;
    double lhs_w1inf = 0.0, rhs_w1inf = 0.0;
    double lhs_low = 0.0, rhs_low = 0.0;    ///< s = k p1
    double lhs_high = 0.0, rhs_high = 0.0;  ///< s = k p2
    double ratio_w1inf() const { return rhs_w1inf > 0.0 ? lhs_w1inf / rhs_w1inf : 0.0; }
    double ratio_low() const { return rhs_low > 0.0 ? lhs_low / rhs_low : 0.0; }
    double ratio_high() const { return rhs_high > 0.0 ? lhs_high / rhs_high : 0.0; }
};

struct CommutatorRatioReport {
    std::vector<CommutatorRatio> samples;
    /// max/min of each ratio over samples with a nonzero right-hand side.
    double spread_w1inf = 0.0, spread_low = 0.0, spread_high = 0.0;
    bool bounded = false;
};

CommutatorRatioReport verify_commutator_estimates(const std::vector<CommutatorSample>& samples,
                                                  const GridSpec& grid, const SolverConfig& cfg,
                                                  double spread_limit = 10.0);

/// Gaussian densities rho(x / delta) for each dilation times each amplitude pair (a rho, b u),
/// with u = tanh(x_1) exp(-|x|^2 / 50) e_1.
std::vector<CommutatorSample> dilation_family(const GridSpec& grid, const std::vector<double>& dilations,
                                              const std::vector<std::pair<double, double>>& amplitudes);

}  // namespace cslab
