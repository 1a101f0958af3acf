#include "cslab/scalings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "cslab/errors.hpp"
#include "cslab/rng.hpp"

namespace cslab {

namespace {

constexpr double kLinkageTol = 1e-10;

bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

std::string eps_label(double eps) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "eps = %.17g: ", eps);
    return buf;
}

double gaussian(const Vec& x, const Vec& c, double s) {
    return std::exp(-norm_sq(x - c) / (2.0 * s * s));
}

}  // namespace

DimensionlessParameters derive_scaling_preset(const PhysicalConstants& c) {
    const double all[] = {c.mu, c.tau, c.sigma, c.K, c.m, c.M, c.T, c.R, c.V, c.psi0, c.f0};
    for (double v : all)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("physical constants must be positive and finite");
    if (c.dim < 1 || c.dim > 3) throw ConfigError("dimension must be 1, 2 or 3");

    // R / T is the drift velocity of the potential and M the mass carried by f0 on the unit cell.
    const double drift = c.tau * c.psi0 / (c.m * c.R);
    if (!close_rel(c.R / c.T, drift, kLinkageTol))
        throw InconsistencyError("R/T = " + std::to_string(c.R / c.T) + " but tau psi0 / (m R) = " +
                                 std::to_string(drift));
    const double mass = std::pow(c.V * c.R, c.dim) * c.f0;
    if (!close_rel(c.M, mass, kLinkageTol))
        throw InconsistencyError("M = " + std::to_string(c.M) + " but (V R)^N f0 = " + std::to_string(mass));

    const double s = std::sqrt(c.mu);
    DimensionlessParameters p;
    p.alpha = s / (c.R / c.T);
    p.beta = s * c.tau / c.R;
    p.velocity = s / c.V;
    p.mass = c.m / c.M;
    p.delta = c.sigma / c.R;
    p.strength = c.tau * c.K;
    return p;
}

DimensionlessParameters scaling_preset(ScalingKind kind, double epsilon, double gamma, double lambda) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    DimensionlessParameters p;
    p.alpha = 1.0;
    p.mass = 1.0;
    p.delta = epsilon;
    p.strength = std::pow(epsilon, -2.0 * lambda);
    switch (kind) {
        case ScalingKind::hyperbolic:
            p.beta = epsilon;
            p.velocity = 1.0;
            break;
        case ScalingKind::intermediate:
        case ScalingKind::generalized_friction:
            p.beta = std::pow(epsilon, 1.0 + gamma);
            p.velocity = std::pow(epsilon, gamma);
            break;
        case ScalingKind::frictionless:
            p.beta = epsilon;
            p.velocity = epsilon;
            break;
    }
    return p;
}

KineticCoefficients kinetic_coefficients(const DimensionlessParameters& p, double lambda, bool with_friction) {
    KineticCoefficients k;
    k.time = p.beta / p.alpha;
    k.transport = p.beta / p.velocity;
    k.force = p.velocity / p.alpha;
    k.friction = with_friction ? 1.0 : 0.0;
    k.diffusion = p.velocity * p.velocity;
    k.alignment = p.strength / p.mass * std::pow(p.delta, 2.0 * lambda);
    k.range = p.delta;
    return k;
}

std::vector<VectorTestFunction> default_test_dictionary(int dim) {
    const Vec e1{1.0, 0.0, 0.0};
    const Vec o{0.0, 0.0, 0.0};
    std::vector<VectorTestFunction> out;
    auto gauss_e1 = [&](std::string name, Vec c, double s) {
        out.push_back({std::move(name), [c, s, e1](double, const Vec& x) { return gaussian(x, c, s) * e1; },
                       std::exp(-0.5) / s});
    };
    gauss_e1("gauss_s1", o, 1.0);
    gauss_e1("gauss_right_s05", Vec{0.5, 0.0, 0.0}, 0.5);
    gauss_e1("gauss_left_s1", Vec{-0.5, 0.0, 0.0}, 1.0);
    gauss_e1("gauss_s2", o, 2.0);
    out.push_back({"x1_gauss_s1", [e1](double, const Vec& x) { return x[0] * gaussian(x, Vec{}, 1.0) * e1; }, 1.0});
    out.push_back({"x1_gauss_s05", [e1](double, const Vec& x) { return x[0] * gaussian(x, Vec{}, 0.5) * e1; }, 1.0});
    out.push_back({"radial_gauss_s1", [dim](double, const Vec& x) {
                       Vec y{0.0, 0.0, 0.0};
                       for (int c = 0; c < dim; ++c) y[c] = x[c];
                       return gaussian(x, Vec{}, 1.0) * y;
                   },
                   1.0});
    out.push_back({"x1sq_gauss_s1", [e1](double, const Vec& x) { return x[0] * x[0] * gaussian(x, Vec{}, 1.0) * e1; },
                   1.0});
    return out;
}

void SweepConfig::validate() const {
    scaling.validate();
    if (eps_list.empty()) throw ConfigError("sweep eps list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw ConfigError("sweep eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("sweep eps list must be strictly decreasing");
    }
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    if (particles == 0) throw ConfigError("sweep needs at least one particle");
    if (dim < 1 || dim > 3) throw ConfigError("dimension must be 1, 2 or 3");
    if (!(scaling.lambda < 0.5 * dim)) throw ConfigError("lambda must be below dim / 2");
    if (!(mass > 0.0)) throw ConfigError("sweep mass must be positive");
    if (!(horizon > 0.0)) throw ConfigError("sweep horizon must be positive");
    if (!(dt_fraction > 0.0) || dt_fraction > model.controls.stiffness_fraction)
        throw ConfigError("dt_fraction must lie in (0, stiffness_fraction]");
    if (snapshots < 2) throw ConfigError("sweep needs at least 2 snapshots");
    if (!(e0_scale > 0.0)) throw ConfigError("e0_scale must be positive");
    if (scaling.kind == ScalingKind::generalized_friction) {
        grid.validate();
        if (grid.dim != dim) throw ConfigError("sweep grid dimension differs from the ensemble dimension");
        for (double e : eps_list) {
            ScalingSpec s = scaling;
            s.epsilon = e;
            s.validate();
        }
    }
}

std::vector<std::pair<std::string, const std::vector<double>*>> StepSeries::columns() const {
    return {{"time", &time},       {"dissipation", &dissipation},
            {"commutator_tv", &commutator_tv},
            {"m1", &m1},           {"m2", &m2},
            {"m3", &m3},           {"mk1", &mk1},
            {"mk2", &mk2},         {"m_inv", &m_inv},
            {"force1", &force1},   {"force2", &force2},
            {"force3", &force3},   {"grad_sup", &grad_sup},
            {"theta", &theta},     {"test_integral", &test_integral}};
}

double RunRecord::integrated_dissipation() const { return trapezoid(series.time, series.dissipation); }

double RunRecord::commutator_l2l1() const {
    std::vector<double> sq(series.commutator_tv.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = series.commutator_tv[i] * series.commutator_tv[i];
    return std::sqrt(trapezoid(series.time, sq));
}

const RunRecord& SweepReport::run(std::size_t eps_index, std::size_t seed_index) const {
    return runs.at(eps_index * seeds.size() + seed_index);
}

ScalingSpec SweepReport::scaling_at(double epsilon) const {
    ScalingSpec s = scaling;
    s.epsilon = epsilon;
    return s;
}

double theta_integrand(const ParticleEnsemble& state, double k) {
    double acc = 0.0;
    for (const Vec& v : state.velocities) {
        const double s = norm(v);
        acc += std::fabs(std::pow(s, k) - 1.0) * s;
    }
    return state.weight * acc;
}

namespace {

void record_step(StepSeries& out, const ParticleEnsemble& s, const std::vector<Vec>& align,
                 const PotentialSpec& potential, double k, bool theta) {
    const double w = s.weight;
    const std::size_t n = s.size();
    Vec mean{0.0, 0.0, 0.0};
    for (const Vec& v : s.velocities) mean = mean + v;
    mean = (1.0 / static_cast<double>(n)) * mean;

    // Sum_i a_i = 0, so centring v keeps the dissipation free of cancellation.
    double diss = 0.0, tv = 0.0;
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, mk1 = 0.0, mk2 = 0.0, minv = 0.0;
    double f1 = 0.0, f2 = 0.0, f3 = 0.0, gsup = 0.0, th = 0.0, test = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& v = s.velocities[i];
        diss += dot(v - mean, align[i]);
        tv += norm(align[i]);
        const double sp = norm(v);
        const double sk = std::pow(sp, k);
        m1 += sp;
        m2 += sp * sp;
        m3 += sp * sp * sp;
        mk1 += sk * sp;
        mk2 += sk * sp * sp;
        if (s.dim >= 2 && sp > 0.0) minv += 1.0 / sp;
        const double g = norm(potential_gradient(potential, s.time, s.positions[i]));
        f1 += g;
        f2 += sp * g;
        f3 += sp * sp * g;
        gsup = std::max(gsup, g);
        if (theta) th += std::fabs(sk - 1.0) * sp;
        test += std::exp(-0.5 * norm_sq(s.positions[i]));
    }
    out.time.push_back(s.time);
    out.dissipation.push_back(-2.0 * w * diss);
    out.commutator_tv.push_back(w * tv);
    out.m1.push_back(w * m1);
    out.m2.push_back(w * m2);
    out.m3.push_back(w * m3);
    out.mk1.push_back(w * mk1);
    out.mk2.push_back(w * mk2);
    out.m_inv.push_back(w * minv);
    out.force1.push_back(w * f1);
    out.force2.push_back(w * f2);
    out.force3.push_back(w * f3);
    out.grad_sup.push_back(gsup);
    out.theta.push_back(w * th);
    out.test_integral.push_back(w * test);
}

template <class E>
[[noreturn]] void rethrow_with_eps(const E& e, double eps) {
    throw E(eps_label(eps) + e.what());
}

RunRecord simulate_run(const SweepConfig& cfg, double eps, std::uint64_t seed) {
    ScalingSpec scaling = cfg.scaling;
    scaling.epsilon = eps;
    scaling.validate();
    const double gamma = scaling.effective_gamma();
    const bool generalized = scaling.kind == ScalingKind::generalized_friction;

    RunRecord rec;
    rec.epsilon = eps;
    rec.seed = seed;
    rec.k = generalized ? scaling.k_law(eps) : 0.0;
    rec.alpha = generalized ? scaling.alpha_law(eps) : 0.0;
    rec.position_rate = scaled_coefficients(scaling).position_rate;

    // Same initial law for every eps; only the noise depends on eps.
    ParticleEnsemble state =
        sample_uniform_ensemble(cfg.particles, cfg.dim, cfg.mass, cfg.position_half_width, cfg.velocity_half_width,
                                substream(seed, "initial"));
    ModelSpec spec = cfg.model;
    spec.model = ModelKind::scaled;
    spec.seed = substream(seed, std::bit_cast<std::uint64_t>(eps));

    const double limit = cfg.dt_fraction * std::pow(eps, 1.0 + gamma);
    rec.steps = static_cast<std::size_t>(std::floor(cfg.horizon / limit)) + 1;
    rec.dt = cfg.horizon / static_cast<double>(rec.steps);

    std::vector<std::size_t> snap_steps;
    for (std::size_t s = 0; s < cfg.snapshots; ++s) {
        const auto step = static_cast<std::size_t>(
            std::llround(static_cast<double>(s) * static_cast<double>(rec.steps) /
                         static_cast<double>(cfg.snapshots - 1)));
        if (snap_steps.empty() || step != snap_steps.back()) snap_steps.push_back(step);
    }

    double m1 = 0.0, m2 = 0.0, m3 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double sp = norm(state.velocities[i]);
        m1 += sp;
        m2 += sp * sp;
        m3 += sp * sp * sp;
        s0 += norm_sq(state.positions[i]);
    }
    rec.initial_m1 = state.weight * m1;
    rec.initial_m2 = state.weight * m2;
    rec.initial_m3 = state.weight * m3;
    rec.budget.M0 = state.total_mass();
    rec.budget.E0 = 0.5 * rec.initial_m2 * cfg.e0_scale;
    rec.budget.S0 = state.weight * s0;
    rec.budget.T = cfg.horizon;

    const std::vector<VectorTestFunction> tests = cfg.tests.empty() ? default_test_dictionary(cfg.dim) : cfg.tests;
    const KernelParams kp{scaling.lambda, eps, cfg.dim};
    DepositionOptions dep;
    dep.bandwidth = cfg.bandwidth;
    dep.friction_exponent = rec.k;

    auto snapshot = [&](std::size_t step) {
        SnapshotRecord snap;
        snap.step = step;
        snap.time = state.time;
        snap.pairs = pair_statistics(state, kp, tests, cfg.radii);
        if (generalized) {
            const MomentFields m = empirical_moments(state, cfg.grid, dep);
            double acc = 0.0;
            for (std::size_t p = 0; p < cfg.grid.size(); ++p) {
                double d2 = 0.0;
                for (int c = 0; c < cfg.dim; ++c) {
                    const double d = (*m.friction_current)(p, c) - m.current(p, c);
                    d2 += d * d;
                }
                acc += std::sqrt(d2);
            }
            snap.q_minus_j = acc * cfg.grid.cell_volume();
            snap.escaped_mass = m.escaped_mass;
        }
        rec.snapshots.push_back(std::move(snap));
    };

    std::vector<Vec> align;
    std::size_t next_snap = 0;
    for (std::size_t step = 0; step < rec.steps; ++step) {
        if (next_snap < snap_steps.size() && snap_steps[next_snap] == step) {
            snapshot(step);
            ++next_snap;
        }
        ParticleEnsemble next = step_scaled(state, scaling, spec, rec.dt, &align);
        record_step(rec.series, state, align, spec.potential, rec.k, generalized);
        state = std::move(next);
    }
    align = alignment_field(state.positions, state.velocities, state.dim, state.weight, InteractionKernel{kp});
    record_step(rec.series, state, align, spec.potential, rec.k, generalized);
    if (next_snap < snap_steps.size()) snapshot(rec.steps);

    std::vector<double> g2(rec.series.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = rec.series.grad_sup[i] * rec.series.grad_sup[i];
    rec.budget.F0 = std::sqrt(trapezoid(rec.series.time, g2));
    return rec;
}

}  // namespace

SweepReport run_sweep(const SweepConfig& config) {
    config.validate();
    SweepReport rep;
    rep.scaling = config.scaling;
    rep.dim = config.dim;
    rep.horizon = config.horizon;
    rep.eps_list = config.eps_list;
    rep.seeds = config.seeds;
    rep.radii = config.radii;
    for (const auto& t : config.tests.empty() ? default_test_dictionary(config.dim) : config.tests)
        rep.test_names.push_back(t.name);
    for (double eps : config.eps_list) {
        for (std::uint64_t seed : config.seeds) {
            try {
                rep.runs.push_back(simulate_run(config, eps, seed));
            } catch (const StiffnessError& e) {
                rethrow_with_eps(e, eps);
            } catch (const StepRejectedError& e) {
                rethrow_with_eps(e, eps);
            } catch (const EscapeError& e) {
                rethrow_with_eps(e, eps);
            }
        }
    }
    return rep;
}

Verdict make_verdict(std::string name, double epsilon, std::uint64_t seed, double lhs, double rhs, double tolerance) {
    Verdict v;
    v.name = std::move(name);
    v.epsilon = epsilon;
    v.seed = seed;
    v.lhs = lhs;
    v.rhs = rhs;
    v.tolerance = tolerance;
    v.pass = lhs <= rhs * (1.0 + tolerance);
    return v;
}

namespace {

double l2_in_time(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<double> sq(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sq[i] = y[i] * y[i];
    return std::sqrt(trapezoid(t, sq));
}

double lp_in_time(const std::vector<double>& t, const std::vector<double>& y, double p) {
    std::vector<double> yp(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yp[i] = std::pow(y[i], p);
    return std::pow(trapezoid(t, yp), 1.0 / p);
}

double snapshot_integral(const RunRecord& run, const std::function<double(const SnapshotRecord&)>& f) {
    std::vector<double> t, y;
    for (const auto& s : run.snapshots) {
        t.push_back(s.time);
        y.push_back(f(s));
    }
    return t.size() < 2 ? 0.0 : trapezoid(t, y);
}

double prefactor(double alpha, double k) { return 1.0 - (alpha + 0.5) * 2.0 / (2.0 + k); }

// |int G d rho(t1) - int G d rho(t2)| against |grad G|_inf rate ||v f||_{L2 L1} |t1 - t2|^(1/2).
Verdict holder_verdict(const RunRecord& run, double tol) {
    const StepSeries& s = run.series;
    const double grad_g = std::exp(-0.5);
    const double l2 = l2_in_time(s.time, s.m1);
    double worst_lhs = 0.0, worst_rhs = 1.0, worst_ratio = -1.0;
    for (std::size_t a = 0; a < run.snapshots.size(); ++a) {
        for (std::size_t b = a + 1; b < run.snapshots.size(); ++b) {
            const std::size_t ia = run.snapshots[a].step, ib = run.snapshots[b].step;
            const double lhs = std::fabs(s.test_integral[ia] - s.test_integral[ib]);
            const double rhs = grad_g * run.position_rate * l2 * std::sqrt(std::fabs(s.time[ib] - s.time[ia]));
            const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst_lhs = lhs;
                worst_rhs = rhs;
            }
        }
    }
    return make_verdict("holder_modulus", run.epsilon, run.seed, worst_lhs, worst_rhs, tol);
}

void linear_friction_bounds(const SweepReport& rep, const RunRecord& run, const VerifyOptions& o,
                            std::vector<Verdict>& out) {
    const StepSeries& s = run.series;
    const HypothesisBudget& b = run.budget;
    const double eps = run.epsilon;
    const double g = rep.scaling.effective_gamma();
    const double eg = std::pow(eps, g), eg2 = eg * eg;
    const double n = rep.dim;
    const double T = b.T;

    const double l1_m1 = trapezoid(s.time, s.m1);
    const double l1_m2 = trapezoid(s.time, s.m2);
    const double l1_m3 = trapezoid(s.time, s.m3);
    const double l2_m1 = l2_in_time(s.time, s.m1);
    const double rhs_energy = 2.0 * std::pow(eps, 1.0 - g) * b.E0 + (2.0 * n * T + b.F0 * b.F0) * b.M0;

    out.push_back(make_verdict("current_l2_bound", eps, run.seed, l2_m1 / eg, std::sqrt(b.M0 * l1_m2 / eg2),
                               o.mc_tol));
    out.push_back(make_verdict("energy_bound", eps, run.seed, l1_m2 / eg2, rhs_energy, o.mc_tol));
    out.push_back(make_verdict("dissipation_bound", eps, run.seed, run.integrated_dissipation() / eg2, rhs_energy,
                               o.mc_tol));

    // Moment bounds for k = 1, 2, 3 and the matching pairing bounds.
    const double initial[3] = {run.initial_m1, run.initial_m2, run.initial_m3};
    const double lower[3] = {trapezoid(s.time, s.m_inv), b.T * b.M0, l1_m1};
    const double force[3] = {trapezoid(s.time, s.force1), trapezoid(s.time, s.force2), trapezoid(s.time, s.force3)};
    const double moment[3] = {l1_m1, l1_m2, l1_m3};
    // In one dimension |v| has second derivative 2 delta_0, which the k = 1 bound omits.
    for (int k = rep.dim == 1 ? 2 : 1; k <= 3; ++k) {
        const double rhs = std::pow(eps, 1.0 - g) * initial[k - 1] + k * (n + k - 2.0) * lower[k - 1] +
                           k * force[k - 1] / eg;
        const std::string tag = "_k" + std::to_string(k);
        out.push_back(make_verdict("moment_bound" + tag, eps, run.seed, k * moment[k - 1] / eg2, rhs, o.mc_tol));
        const double pairing = k == 2 ? run.integrated_dissipation()
                                      : snapshot_integral(run, [k](const SnapshotRecord& r) {
                                            return r.pairs.pairing[k - 1];
                                        });
        out.push_back(make_verdict("pairing_bound" + tag, eps, run.seed, pairing / eg2, rhs, o.mc_tol));
    }
}

void frictionless_bounds(const SweepReport& rep, const RunRecord& run, const VerifyOptions& o,
                         std::vector<Verdict>& out) {
    const StepSeries& s = run.series;
    const HypothesisBudget& b = run.budget;
    const double eps = run.epsilon;
    const double lam = rep.scaling.lambda;
    const double n = rep.dim;
    const double sup_m1 = *std::max_element(s.m1.begin(), s.m1.end());
    const double sup_m2 = *std::max_element(s.m2.begin(), s.m2.end());
    const double core = 2.0 * b.E0 + (2.0 * n * b.T + 2.0 * b.F0 * b.F0) * b.M0;

    out.push_back(make_verdict("current_sup_bound", eps, run.seed, sup_m1, std::sqrt(b.M0 * sup_m2), o.mc_tol));
    out.push_back(make_verdict("energy_sup_bound", eps, run.seed, 0.5 * sup_m2, core, o.mc_tol));
    out.push_back(make_verdict("scaled_dissipation_bound", eps, run.seed,
                               std::pow(eps, -2.0 * lam) * run.integrated_dissipation(),
                               std::pow(eps, 1.0 - 2.0 * lam) * core, o.mc_tol));
    out.push_back(make_verdict("commutator_rate_bound", eps, run.seed, run.commutator_l2l1(),
                               std::pow(eps, 0.5 - lam) * std::sqrt(core) * b.M0, o.mc_tol));
}

void generalized_bounds(const SweepReport& rep, const RunRecord& run, const VerifyOptions& o, double threshold,
                        std::vector<Verdict>& out) {
    const StepSeries& s = run.series;
    const HypothesisBudget& b = run.budget;
    const double eps = run.epsilon;
    const double g = rep.scaling.effective_gamma();
    const double eg2 = std::pow(eps, 2.0 * g);
    const double k = run.k, alpha = run.alpha;

    const double pf = prefactor(alpha, k);
    if (eps <= threshold) out.push_back(make_verdict("friction_prefactor", eps, run.seed, 0.25, pf, 0.0));

    const double top = trapezoid(s.time, s.mk2);
    const double lhs = pf * top / eg2 + run.integrated_dissipation() / eg2;
    const double rhs = 2.0 * std::pow(eps, 1.0 - g) * b.E0 + ((alpha + 0.5) * k / (2.0 + k) / eg2 + 1.0) * b.T * b.M0 +
                       0.5 * b.M0 * b.F0 * b.F0;
    out.push_back(make_verdict("friction_energy_bound", eps, run.seed, lhs, rhs, o.mc_tol));

    // Hoelder interpolation between |v|^(k+2) and the mass; exact for every sample.
    const double p = 1.0 + k / 2.0, q = 2.0 + k, r = 2.0 - k / (1.0 + k);
    auto conj = [](double e) { return e / (e - 1.0); };
    auto mass_power = [&](double e) { return e == 1.0 ? 1.0 : std::pow(b.M0, 1.0 / conj(e)); };
    out.push_back(make_verdict("interpolation_energy", eps, run.seed, lp_in_time(s.time, s.m2, p),
                               std::pow(top, 1.0 / p) * mass_power(p), o.exact_tol));
    out.push_back(make_verdict("interpolation_current", eps, run.seed, lp_in_time(s.time, s.m1, q),
                               std::pow(top, 1.0 / q) * mass_power(q), o.exact_tol));
    out.push_back(make_verdict("interpolation_friction_current", eps, run.seed, lp_in_time(s.time, s.mk1, r),
                               std::pow(top, 1.0 / r) * mass_power(r), o.exact_tol));
}

}  // namespace

double prefactor_threshold(const ScalingSpec& scaling) {
    // Scan a log grid upward from tiny eps until the prefactor first drops below 1/4.
    double last_ok = 0.0;
    for (int i = 0; i <= 6000; ++i) {
        const double eps = std::pow(10.0, -6.0 + i * 1e-3);
        if (prefactor(scaling.alpha_law(eps), scaling.k_law(eps)) < 0.25) break;
        last_ok = eps;
    }
    return last_ok;
}

std::vector<Verdict> check_friction_hypotheses(const ScalingSpec& scaling, const std::vector<double>& eps_list) {
    std::vector<Verdict> out;
    if (scaling.kind != ScalingKind::generalized_friction || eps_list.size() < 2) return out;
    const double first = eps_list.front(), last = eps_list.back();
    const double k0 = scaling.k_law(first), k1 = scaling.k_law(last);
    const double a0 = scaling.alpha_law(first), a1 = scaling.alpha_law(last);
    // o(1) witnessed as decrease along the sweep (or identically zero).
    auto decreasing = [&](const char* name, double v0, double v1, const std::function<double(double)>& f) {
        bool mono = true;
        for (std::size_t i = 1; i < eps_list.size(); ++i) mono = mono && f(eps_list[i]) <= f(eps_list[i - 1]);
        const bool ok = mono && (v1 < v0 || v1 == 0.0);
        Verdict v = make_verdict(name, last, 0, v1, v0, 0.0);
        v.pass = ok;
        out.push_back(v);
    };
    decreasing("alpha_vanishes", a0, a1, [&](double e) { return scaling.alpha_law(e); });
    if (scaling.gamma == 0.0) {
        decreasing("k_vanishes", k0, k1, [&](double e) { return scaling.k_law(e); });
        return out;
    }
    // k = O(eps^(2 gamma)): the ratio at the smallest eps stays below its largest value over the sweep.
    const double g2 = 2.0 * scaling.gamma;
    double max_ratio = 0.0;
    for (double e : eps_list) max_ratio = std::max(max_ratio, scaling.k_law(e) / std::pow(e, g2));
    out.push_back(make_verdict("k_order_eps_2gamma", last, 0, k1 / std::pow(last, g2), max_ratio, 1e-12));
    // k' = O(eps^(gamma - 1)) through difference quotients scaled by eps^(1 - gamma).
    double max_slope = 0.0, last_slope = 0.0;
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        const double e0 = eps_list[i - 1], e1 = eps_list[i];
        const double slope =
            std::fabs(scaling.k_law(e0) - scaling.k_law(e1)) / (e0 - e1) * std::pow(e1, 1.0 - scaling.gamma);
        max_slope = std::max(max_slope, slope);
        last_slope = slope;
    }
    out.push_back(make_verdict("k_derivative_order", last, 0, last_slope, max_slope, 1e-12));
    return out;
}

std::vector<ScaledMoments> scaled_moments(const SweepReport& report) {
    const double g = report.scaling.effective_gamma();
    std::vector<ScaledMoments> out;
    for (std::size_t e = 0; e < report.eps_list.size(); ++e) {
        ScaledMoments m;
        m.epsilon = report.eps_list[e];
        const double eg = std::pow(m.epsilon, g), eg2 = eg * eg;
        const double ns = static_cast<double>(report.seeds.size());
        for (std::size_t s = 0; s < report.seeds.size(); ++s) {
            const RunRecord& r = report.run(e, s);
            const double rr = 2.0 - r.k / (1.0 + r.k);
            m.top += trapezoid(r.series.time, r.series.mk2) / eg2 / ns;
            m.friction_current += lp_in_time(r.series.time, r.series.mk1, rr) / eg / ns;
            m.energy += trapezoid(r.series.time, r.series.m2) / eg2 / ns;
            m.current += l2_in_time(r.series.time, r.series.m1) / eg / ns;
            m.dissipation += r.integrated_dissipation() / eg2 / ns;
        }
        out.push_back(m);
    }
    return out;
}

std::vector<Verdict> verify_apriori_bounds(const SweepReport& report, const VerifyOptions& options) {
    std::vector<Verdict> out;
    const ScalingKind kind = report.scaling.kind;
    const double threshold = kind == ScalingKind::generalized_friction ? prefactor_threshold(report.scaling) : 0.0;
    for (const RunRecord& run : report.runs) {
        switch (kind) {
            case ScalingKind::hyperbolic:
            case ScalingKind::intermediate: linear_friction_bounds(report, run, options, out); break;
            case ScalingKind::frictionless: frictionless_bounds(report, run, options, out); break;
            case ScalingKind::generalized_friction: generalized_bounds(report, run, options, threshold, out); break;
        }
        if (run.snapshots.size() >= 2) out.push_back(holder_verdict(run, options.mc_tol));
    }
    if (kind == ScalingKind::generalized_friction) {
        const auto hyp = check_friction_hypotheses(report.scaling, report.eps_list);
        out.insert(out.end(), hyp.begin(), hyp.end());
        if (report.eps_list.size() >= 2) {
            const auto sm = scaled_moments(report);
            const std::pair<const char*, double ScaledMoments::*> fields[] = {
                {"bounded_top_moment", &ScaledMoments::top},
                {"bounded_friction_current", &ScaledMoments::friction_current},
                {"bounded_energy", &ScaledMoments::energy},
                {"bounded_current", &ScaledMoments::current},
                {"bounded_dissipation", &ScaledMoments::dissipation}};
            for (const auto& [name, field] : fields) {
                double lo = INFINITY, hi = 0.0;
                for (const auto& m : sm) {
                    lo = std::min(lo, m.*field);
                    hi = std::max(hi, m.*field);
                }
                const double ratio = hi == 0.0 ? 1.0 : (lo > 0.0 ? hi / lo : INFINITY);
                out.push_back(make_verdict(name, report.eps_list.back(), 0, ratio, options.boundedness_factor, 0.0));
            }
        }
    }
    return out;
}

std::vector<Verdict> aggregate_over_seeds(const std::vector<Verdict>& verdicts) {
    std::vector<Verdict> out;
    std::map<std::pair<std::string, double>, std::size_t> slot;
    for (const Verdict& v : verdicts) {
        const auto key = std::make_pair(v.name, v.epsilon);
        const auto it = slot.find(key);
        if (it == slot.end()) {
            slot.emplace(key, out.size());
            out.push_back(v);
            continue;
        }
        Verdict& cur = out[it->second];
        if ((v.pass && !cur.pass) || (v.pass == cur.pass && v.slack() > cur.slack())) cur = v;
    }
    return out;
}

DecayFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DegenerateFitError("power-law fit needs two or more pairs");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i]))
            throw DegenerateFitError("power-law fit needs positive finite data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateFitError("power-law fit needs distinct abscissae");
    DecayFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

double integrated_weak_form(const RunRecord& run, std::size_t test, double gamma) {
    return std::pow(run.epsilon, -gamma) *
           snapshot_integral(run, [test](const SnapshotRecord& s) { return s.pairs.weak_forms.at(test); });
}

RunQuantity run_quantity(const std::string& name, const SweepReport& report) {
    const double g = report.scaling.effective_gamma();
    if (name == "commutator_l2l1") return [](const RunRecord& r) { return r.commutator_l2l1(); };
    if (name == "dissipation") return [](const RunRecord& r) { return r.integrated_dissipation(); };
    if (name == "theta")
        return [g](const RunRecord& r) { return std::pow(r.epsilon, -g) * trapezoid(r.series.time, r.series.theta); };
    if (name == "q_minus_j")
        return [g](const RunRecord& r) {
            return std::pow(r.epsilon, -g) * snapshot_integral(r, [](const SnapshotRecord& s) { return s.q_minus_j; });
        };
    throw ConfigError("unknown decay quantity '" + name + "'");
}

DecayFit fit_decay_rate(const SweepReport& report, const RunQuantity& quantity, std::size_t min_points,
                        double min_span) {
    const auto& eps = report.eps_list;
    if (eps.size() < min_points) throw InsufficientSeriesError("decay fit needs " + std::to_string(min_points) +
                                                               " eps values");
    const double span = *std::max_element(eps.begin(), eps.end()) / *std::min_element(eps.begin(), eps.end());
    if (span < min_span) throw InsufficientSeriesError("decay fit eps range spans a factor below the minimum");
    std::vector<double> y(eps.size(), 0.0);
    for (std::size_t e = 0; e < eps.size(); ++e) {
        for (std::size_t s = 0; s < report.seeds.size(); ++s) y[e] += quantity(report.run(e, s));
        y[e] /= static_cast<double>(report.seeds.size());
    }
    return fit_power_law(eps, y);
}

std::vector<CauchyRow> commutator_cauchy_test(const SweepReport& report) {
    const double g = report.scaling.effective_gamma();
    const std::size_t nt = report.test_names.size();
    const std::size_t ns = report.seeds.size();
    const std::size_t ne = ns == 0 ? 0 : report.runs.size() / ns;
    std::vector<std::vector<double>> values(ne, std::vector<double>(nt, 0.0));
    for (std::size_t e = 0; e < ne; ++e)
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t t = 0; t < nt; ++t)
                values[e][t] += integrated_weak_form(report.runs[e * ns + s], t, g) / static_cast<double>(ns);
    std::vector<CauchyRow> out;
    for (std::size_t e = 0; e + 1 < ne; ++e) {
        CauchyRow row;
        row.eps_a = report.runs[e * ns].epsilon;
        row.eps_b = report.runs[(e + 1) * ns].epsilon;
        for (std::size_t t = 0; t < nt; ++t) row.deviations.push_back(std::fabs(values[e][t] - values[e + 1][t]));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<RhLimitRow> rh_limit_quantities(const SweepReport& report) {
    if (report.scaling.kind != ScalingKind::generalized_friction)
        throw ConfigError("Rayleigh–Helmholtz limit quantities need a generalized-friction sweep");
    const double g = report.scaling.effective_gamma();
    const auto theta = run_quantity("theta", report);
    const auto qj = run_quantity("q_minus_j", report);
    std::vector<RhLimitRow> out;
    const double ns = static_cast<double>(report.seeds.size());
    for (std::size_t e = 0; e < report.eps_list.size(); ++e) {
        RhLimitRow row;
        row.epsilon = report.eps_list[e];
        row.k = report.scaling_at(row.epsilon).k_law(row.epsilon);
        row.p = 1.0 + row.k / 2.0;
        row.q = 2.0 + row.k;
        row.r = 2.0 - row.k / (1.0 + row.k);
        const double eg = std::pow(row.epsilon, -g);
        for (std::size_t s = 0; s < report.seeds.size(); ++s) {
            const RunRecord& r = report.run(e, s);
            row.theta += theta(r) / ns;
            row.q_minus_j += qj(r) / ns;
            if (row.q_minus_j_series.empty()) row.q_minus_j_series.assign(r.snapshots.size(), 0.0);
            for (std::size_t i = 0; i < r.snapshots.size() && i < row.q_minus_j_series.size(); ++i)
                row.q_minus_j_series[i] += eg * r.snapshots[i].q_minus_j / ns;
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace cslab
