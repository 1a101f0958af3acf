#include "cslab/macrosolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "cslab/errors.hpp"
#include "cslab/parallel.hpp"

namespace cslab {

namespace {

/// Derivative of every component along one axis.
Field derivative_all(const GridSpec& grid, const Field& f, int axis) {
    Field out(grid.size(), f.components);
    for (std::size_t c = 0; c < f.components; ++c) {
        const Field d = partial_derivative(grid, f, c, axis);
        for (std::size_t a = 0; a < grid.size(); ++a) out(a, c) = d(a);
    }
    return out;
}

double grad_abs_sup(const GridSpec& grid, const Field& f) {
    std::vector<double> acc(grid.size(), 0.0);
    for (int axis = 0; axis < grid.dim; ++axis) {
        for (std::size_t c = 0; c < f.components; ++c) {
            const Field d = partial_derivative(grid, f, c, axis);
            for (std::size_t a = 0; a < grid.size(); ++a) acc[a] += std::abs(d(a));
        }
    }
    return acc.empty() ? 0.0 : *std::max_element(acc.begin(), acc.end());
}

LevelNorms level_norms(const GridSpec& grid, const Field& f, double low, double high) {
    LevelNorms n;
    n.sup = lp_norm(grid, f, std::numeric_limits<double>::infinity());
    n.grad_sup = grad_abs_sup(grid, f);
    n.l_low = lp_norm(grid, f, low);
    n.l_high = lp_norm(grid, f, high);
    return n;
}

double trapezoid_uniform(const std::vector<double>& y, double dt) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dt;
}

double inverse(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

Field gradient_field(const GridSpec& grid, const PotentialSpec& potential, double t) {
    return sample_vector(grid, static_cast<std::size_t>(grid.dim),
                         [&](const Vec& x) { return potential_gradient(potential, t, x); });
}

}  // namespace

VelocityField::VelocityField(GridSpec grid, double dt, std::vector<Field> levels, double low_exponent,
                             double high_exponent)
    : grid_(std::move(grid)), dt_(dt), levels_(std::move(levels)), low_(low_exponent), high_(high_exponent) {
    grid_.validate();
    if (levels_.empty()) throw ConfigError("velocity field needs at least one time level");
    if (!(dt_ > 0.0)) throw ConfigError("velocity field time step must be positive");
    const auto comps = static_cast<std::size_t>(grid_.dim);
    for (const auto& f : levels_) {
        if (f.components != comps || f.node_count() != grid_.size())
            throw ConfigError("velocity level does not match the grid");
    }
    div_.reserve(levels_.size());
    norms_.reserve(levels_.size());
    for (std::size_t m = 0; m < levels_.size(); ++m) {
        div_.push_back(cslab::divergence(grid_, levels_[m]));
        norms_.push_back(level_norms(grid_, levels_[m], low_, high_));
    }
}

LevelNorms VelocityField::recompute_norms(std::size_t m) const { return level_norms(grid_, levels_[m], low_, high_); }

namespace {

struct TimeSlot {
    std::size_t m = 0;
    double w = 0.0;
};

TimeSlot locate(double t, double dt, std::size_t levels) {
    if (levels == 1) return {0, 0.0};
    const double s = std::clamp(t / dt, 0.0, static_cast<double>(levels - 1));
    auto m = static_cast<std::size_t>(std::floor(s));
    if (m >= levels - 1) m = levels - 2;
    return {m, s - static_cast<double>(m)};
}

}  // namespace

Vec VelocityField::value(double t, const Vec& x) const {
    const TimeSlot slot = locate(t, dt_, levels_.size());
    Vec out{0.0, 0.0, 0.0};
    for (int c = 0; c < grid_.dim; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        double v = interpolate(grid_, levels_[slot.m], cc, x);
        if (slot.w > 0.0) v = (1.0 - slot.w) * v + slot.w * interpolate(grid_, levels_[slot.m + 1], cc, x);
        out[cc] = v;
    }
    return out;
}

double VelocityField::divergence(double t, const Vec& x) const {
    const TimeSlot slot = locate(t, dt_, levels_.size());
    double v = interpolate(grid_, div_[slot.m], 0, x);
    if (slot.w > 0.0) v = (1.0 - slot.w) * v + slot.w * interpolate(grid_, div_[slot.m + 1], 0, x);
    return v;
}

double VelocityField::l1_w1inf() const { return l1_w1inf(norms_.size() - 1); }

double VelocityField::l1_w1inf(std::size_t last_level) const {
    const std::size_t n = std::min(last_level + 1, norms_.size());
    std::vector<double> y(n);
    for (std::size_t m = 0; m < n; ++m) y[m] = norms_[m].sup + norms_[m].grad_sup;
    return trapezoid_uniform(y, dt_);
}

Backtrace flow_backtrace(const VelocityField& u, double t, const Vec& x) {
    const GridSpec& grid = u.grid();
    auto exit_error = [](double s) {
        std::ostringstream os;
        os << "characteristic left the grid box at time " << s;
        return DomainExitError(os.str(), s);
    };
    if (!grid.contains(x)) throw exit_error(t);
    Backtrace out;
    out.x0 = x;
    if (t <= 0.0) return out;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / u.dt() - 1e-9)));
    const double h = -t / static_cast<double>(steps);
    Vec X = x;
    double L = 0.0;
    double s = t;
    auto stage = [&](double time, const Vec& pos, Vec& dx, double& dl) {
        if (!grid.contains(pos)) throw exit_error(time);
        dx = u.value(time, pos);
        dl = u.divergence(time, pos);
    };
    for (std::size_t i = 0; i < steps; ++i) {
        Vec k1, k2, k3, k4;
        double l1, l2, l3, l4;
        stage(s, X, k1, l1);
        stage(s + 0.5 * h, X + (0.5 * h) * k1, k2, l2);
        stage(s + 0.5 * h, X + (0.5 * h) * k2, k3, l3);
        stage(s + h, X + h * k3, k4, l4);
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        L += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        s = t + h * static_cast<double>(i + 1);
        if (!grid.contains(X)) throw exit_error(s);
    }
    out.x0 = X;
    out.log_jacobian = L;
    return out;
}

DensityField transport_pushforward(const Field& rho0, const VelocityField& u, const std::vector<std::size_t>& levels,
                                   ExitPolicy policy) {
    const GridSpec& grid = u.grid();
    if (rho0.components != 1 || rho0.node_count() != grid.size())
        throw ConfigError("initial density does not match the velocity grid");
    DensityField out;
    out.grid = grid;
    out.dt = u.dt();
    if (levels.empty()) {
        for (std::size_t m = 0; m < u.level_count(); ++m) out.levels.push_back(m);
    } else {
        for (std::size_t m : levels) {
            if (m >= u.level_count()) throw ConfigError("requested density level beyond the velocity horizon");
            out.levels.push_back(m);
        }
    }
    for (std::size_t m : out.levels) {
        const double t = u.time(m);
        Field rho(grid.size(), 1);
        if (m == 0) {
            rho = rho0;
        } else {
            parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
                for (std::size_t a = begin; a < end; ++a) {
                    try {
                        const Backtrace b = flow_backtrace(u, t, grid.coordinate(a));
                        rho(a) = interpolate(grid, rho0, 0, b.x0) * std::exp(b.log_jacobian);
                    } catch (const DomainExitError&) {
                        if (policy == ExitPolicy::error) throw;
                        rho(a) = 0.0;
                    }
                }
            });
        }
        out.values.push_back(std::move(rho));
    }
    return out;
}

CommutatorOperator::CommutatorOperator(const GridSpec& grid, double lambda)
    : grid_(grid), weights_(grid, PowerKernel::scaled(KernelParams{lambda, 0.0, grid.dim})) {
    KernelParams{lambda, 0.0, grid.dim}.validate();
}

Field CommutatorOperator::apply(const Field& rho, const Field& u) const {
    if (rho.node_count() != grid_.size() || u.node_count() != grid_.size())
        throw ConfigError("commutator inputs do not match the grid");
    Field out = weights_.apply_difference(u, rho);
    for (double& v : out.data) v = -v;
    return out;
}

Field commutator_apply(const Field& rho, const Field& u, double lambda, const GridSpec& grid) {
    return CommutatorOperator(grid, lambda).apply(rho, u);
}

double sobolev_norm(const Field& f, int order, double p, const GridSpec& grid) {
    // Mixed derivatives along nondecreasing axis sequences, each tagged with its last axis.
    std::vector<std::pair<Field, int>> current{{f, 0}};
    double total = lp_norm(grid, f, p);
    for (int j = 1; j <= order; ++j) {
        std::vector<std::pair<Field, int>> next;
        for (const auto& [field, start] : current) {
            for (int a = start; a < grid.dim; ++a) {
                next.emplace_back(derivative_all(grid, field, a), a);
                total += lp_norm(grid, next.back().first, p);
            }
        }
        current = std::move(next);
    }
    return total;
}

double norm_wkpq(const Field& f, int k, double p, double q, const GridSpec& grid) {
    if (k < 1) throw DomainError("norm_wkpq needs k >= 1");
    if (!(p >= 1.0) || !(q > p)) throw DomainError("norm_wkpq needs 1 <= p < q");
    return sobolev_norm(f, k - 1, p, grid) + sobolev_norm(f, k - 1, q, grid) +
           sobolev_norm(f, k, std::numeric_limits<double>::infinity(), grid);
}

void SolverConfig::validate() const {
    grid.validate();
    const double n = static_cast<double>(grid.dim);
    std::ostringstream os;
    if (!(lambda > 0.0 && lambda < n / 2.0)) {
        os << "lambda = " << lambda << " violates 0 < lambda < N/2 = " << n / 2.0;
        throw ConfigError(os.str());
    }
    if (!(p1 >= 1.0) || !(p2 > p1)) {
        os << "exponents need 1 <= p1 < p2, got p1 = " << p1 << ", p2 = " << p2;
        throw ConfigError(os.str());
    }
    const double mid = 1.0 - 2.0 * lambda / n;
    if (!(inverse(p2) < mid && mid < 1.0 / p1)) {
        os << "exponents violate 1/p2 < 1 - 2 lambda/N < 1/p1: 1/p2 = " << inverse(p2) << ", 1 - 2 lambda/N = " << mid
           << ", 1/p1 = " << 1.0 / p1;
        throw ConfigError(os.str());
    }
    const double floor_k = std::max(n / (2.0 * lambda) - 1.0, n / (2.0 * lambda * p1));
    if (!(static_cast<double>(k) > floor_k)) {
        os << "k = " << k << " violates k > max(N/(2 lambda) - 1, N/(2 lambda p1)) = " << floor_k;
        throw ConfigError(os.str());
    }
    if (!(mu >= 0.0)) throw ConfigError("friction coefficient mu must be >= 0");
    if (!(ball_radius > 0.0)) throw ConfigError("ball radius must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("Picard tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon) throw ConfigError("need 0 < dt <= horizon");
    const double steps = std::round(horizon / dt);
    if (std::abs(steps * dt - horizon) > 1e-9 * horizon) throw ConfigError("horizon must be a multiple of dt");
}

std::size_t SolverConfig::level_count() const { return static_cast<std::size_t>(std::llround(horizon / dt)) + 1; }

namespace {

double levels_iteration_norm(const std::vector<Field>& levels, double dt, const SolverConfig& cfg) {
    std::vector<double> y(levels.size());
    for (std::size_t m = 0; m < levels.size(); ++m)
        y[m] = norm_wkpq(levels[m], 1, cfg.low_exponent(), cfg.high_exponent(), cfg.grid);
    return trapezoid_uniform(y, dt);
}

Field difference(const Field& a, const Field& b) {
    Field out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

}  // namespace

double iteration_norm(const VelocityField& u, const SolverConfig& cfg) {
    std::vector<Field> levels;
    levels.reserve(u.level_count());
    for (std::size_t m = 0; m < u.level_count(); ++m) levels.push_back(u.level(m));
    return levels_iteration_norm(levels, u.dt(), cfg);
}

PicardResult picard_solve(const Field& rho0, const PotentialSpec& potential, const SolverConfig& cfg) {
    cfg.validate();
    if (cfg.mu == 0.0) throw ConfigError("picard_solve needs mu > 0; the fixed-point map is undefined without friction");
    const GridSpec& grid = cfg.grid;
    if (rho0.components != 1 || rho0.node_count() != grid.size())
        throw ConfigError("initial density does not match the solver grid");
    for (double v : rho0.data)
        if (v < 0.0) throw ConfigError("initial density must be nonnegative");

    const std::size_t levels = cfg.level_count();
    const double dt = cfg.horizon / static_cast<double>(levels - 1);
    const double low = cfg.low_exponent(), high = cfg.high_exponent();
    const CommutatorOperator op(grid, cfg.lambda);

    std::vector<Field> grad_psi;
    grad_psi.reserve(levels);
    for (std::size_t m = 0; m < levels; ++m) grad_psi.push_back(gradient_field(grid, potential, dt * static_cast<double>(m)));

    std::vector<Field> u_levels;
    for (const auto& g : grad_psi) {
        Field f = g;
        for (double& v : f.data) v = -v / cfg.mu;
        u_levels.push_back(std::move(f));
    }

    PicardReport report;
    const double start_norm = levels_iteration_norm(u_levels, dt, cfg);
    if (start_norm > cfg.ball_radius) {
        report.all_in_ball = false;
        std::ostringstream os;
        os << "initial iterate -grad psi / mu has norm " << start_norm << " > R = " << cfg.ball_radius;
        throw PicardFailure(os.str(), PicardFailure::Kind::ball_exit, report);
    }

    VelocityField u(grid, dt, u_levels, low, high);
    double previous = 0.0;
    int above_one = 0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const DensityField rho = transport_pushforward(rho0, u, {}, ExitPolicy::zero_density);
        std::vector<Field> next(levels);
        parallel_for(
            levels,
            [&](std::size_t begin, std::size_t end) {
                for (std::size_t m = begin; m < end; ++m) {
                    Field f = op.apply(rho.values[m], u.level(m));
                    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = (f.data[i] - grad_psi[m].data[i]) / cfg.mu;
                    next[m] = std::move(f);
                }
            },
            1);
        std::vector<Field> delta(levels);
        for (std::size_t m = 0; m < levels; ++m) delta[m] = difference(next[m], u.level(m));

        PicardIteration rec;
        rec.index = it;
        rec.difference = levels_iteration_norm(delta, dt, cfg);
        rec.norm = levels_iteration_norm(next, dt, cfg);
        rec.ratio = (it > 1 && previous > 0.0) ? rec.difference / previous : 0.0;
        rec.in_ball = rec.norm <= cfg.ball_radius;
        report.iterations.push_back(rec);
        report.max_ratio = std::max(report.max_ratio, rec.ratio);
        if (!rec.in_ball) {
            report.all_in_ball = false;
            std::ostringstream os;
            os << "iterate " << it << " has norm " << rec.norm << " > R = " << cfg.ball_radius;
            throw PicardFailure(os.str(), PicardFailure::Kind::ball_exit, report);
        }
        above_one = rec.ratio > 1.0 ? above_one + 1 : 0;
        if (above_one >= 3) {
            std::ostringstream os;
            os << "contraction ratio above 1 for 3 consecutive iterations (last " << rec.ratio << ")";
            throw PicardFailure(os.str(), PicardFailure::Kind::non_contraction, report);
        }
        previous = rec.difference;
        u = VelocityField(grid, dt, std::move(next), low, high);
        if (rec.difference < cfg.tolerance) {
            report.converged = true;
            break;
        }
    }

    DensityField rho = transport_pushforward(rho0, u, {}, ExitPolicy::zero_density);

    const double mass0 = rho.mass(0);
    for (std::size_t m = 0; m < levels; ++m) {
        const double drift = mass0 > 0.0 ? std::abs(rho.mass(m) - mass0) / mass0 : std::abs(rho.mass(m));
        report.mass_drift = std::max(report.mass_drift, drift);
    }

    const auto dim = static_cast<std::size_t>(grid.dim);
    for (std::size_t m = 1; m + 1 < levels; ++m) {
        Field flux(grid.size(), dim);
        for (std::size_t a = 0; a < grid.size(); ++a)
            for (std::size_t c = 0; c < dim; ++c) flux(a, c) = rho.values[m](a) * u.level(m)(a, c);
        const Field div = divergence(grid, flux);
        for (std::size_t a = 0; a < grid.size(); ++a) {
            const double r = (rho.values[m + 1](a) - rho.values[m - 1](a)) / (2.0 * dt) + div(a);
            report.continuity_residual = std::max(report.continuity_residual, std::abs(r));
        }
    }
    for (std::size_t m = 0; m < levels; ++m) {
        const Field c = op.apply(rho.values[m], u.level(m));
        for (std::size_t a = 0; a < grid.size(); ++a) {
            const double r0 = rho.values[m](a);
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = r0 * grad_psi[m](a, k) + cfg.mu * r0 * u.level(m)(a, k) - r0 * c(a, k);
                s += v * v;
            }
            report.closure_residual = std::max(report.closure_residual, std::sqrt(s));
        }
    }
    return PicardResult{std::move(u), std::move(rho), std::move(report)};
}

std::pair<double, double> interpolation_exponents(double lambda, double p1, double p2, int dim) {
    const double n = static_cast<double>(dim);
    const double denom = 1.0 / p1 - inverse(p2);
    if (!(denom > 0.0)) throw DomainError("interpolation exponents need p1 < p2");
    const double p2_conj = 1.0 - inverse(p2);  // 1/p2'
    const double p1_conj = 1.0 - 1.0 / p1;     // 1/p1'
    return {(p2_conj - 2.0 * lambda / n) / denom, (2.0 * lambda / n - p1_conj) / denom};
}

SmallnessReport check_smallness(const Field& rho0, const PotentialSpec& potential, const SolverConfig& cfg) {
    cfg.validate();
    SmallnessReport r;
    const std::size_t levels = cfg.level_count();
    const double dt = cfg.horizon / static_cast<double>(levels - 1);
    std::vector<Field> grads;
    grads.reserve(levels);
    for (std::size_t m = 0; m < levels; ++m) grads.push_back(gradient_field(cfg.grid, potential, dt * static_cast<double>(m)));
    r.grad_psi_norm = levels_iteration_norm(grads, dt, cfg);
    r.rho0_norm = norm_wkpq(rho0, cfg.k, cfg.p1, cfg.p2, cfg.grid);
    std::tie(r.theta_low, r.theta_high) = interpolation_exponents(cfg.lambda, cfg.p1, cfg.p2, cfg.grid.dim);
    return r;
}

CommutatorRatioReport verify_commutator_estimates(const std::vector<CommutatorSample>& samples, const GridSpec& grid,
                                                  const SolverConfig& cfg, double spread_limit) {
    const auto [theta_low, theta_high] = interpolation_exponents(cfg.lambda, cfg.p1, cfg.p2, grid.dim);
    const double inf = std::numeric_limits<double>::infinity();
    const double s_low = cfg.low_exponent(), s_high = cfg.high_exponent();
    const CommutatorOperator op(grid, cfg.lambda);
    CommutatorRatioReport report;
    report.samples.resize(samples.size());
    parallel_for(
        samples.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const auto& s = samples[i];
                const Field c = op.apply(s.rho, s.u);
                const double interp = std::pow(lp_norm(grid, s.rho, cfg.p1), theta_low) *
                                      std::pow(lp_norm(grid, s.rho, cfg.p2), theta_high);
                CommutatorRatio& r = report.samples[i];
                r.label = s.label;
                r.lhs_w1inf = sobolev_norm(c, 1, inf, grid);
                r.rhs_w1inf = sobolev_norm(s.u, 1, inf, grid) * interp;
                r.lhs_low = lp_norm(grid, c, s_low);
                r.rhs_low = lp_norm(grid, s.u, s_low) * interp;
                r.lhs_high = lp_norm(grid, c, s_high);
                r.rhs_high = lp_norm(grid, s.u, s_high) * interp;
            }
        },
        1);
    auto spread = [&](double (CommutatorRatio::*ratio)() const) {
        double lo = inf, hi = 0.0;
        for (const auto& r : report.samples) {
            const double v = (r.*ratio)();
            if (v <= 0.0) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi > 0.0 ? hi / lo : 0.0;
    };
    report.spread_w1inf = spread(&CommutatorRatio::ratio_w1inf);
    report.spread_low = spread(&CommutatorRatio::ratio_low);
    report.spread_high = spread(&CommutatorRatio::ratio_high);
    report.bounded = report.spread_w1inf <= spread_limit && report.spread_low <= spread_limit &&
                     report.spread_high <= spread_limit;
    return report;
}

std::vector<CommutatorSample> dilation_family(const GridSpec& grid, const std::vector<double>& dilations,
                                              const std::vector<std::pair<double, double>>& amplitudes) {
    const auto dim = static_cast<std::size_t>(grid.dim);
    std::vector<CommutatorSample> out;
    for (double d : dilations) {
        for (const auto& [a, b] : amplitudes) {
            CommutatorSample s;
            std::ostringstream os;
            os << "delta=" << d << " a=" << a << " b=" << b;
            s.label = os.str();
            s.rho = sample_scalar(grid, [&](const Vec& x) { return a * std::exp(-0.5 * norm_sq(x) / (d * d)); });
            s.u = sample_vector(grid, dim, [&](const Vec& x) {
                return Vec{b * std::tanh(x[0]) * std::exp(-norm_sq(x) / 50.0), 0.0, 0.0};
            });
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace cslab
