#include "cslab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cslab/errors.hpp"
#include "cslab/kernels.hpp"
#include "cslab/macrosolver.hpp"
#include "cslab/output.hpp"
#include "cslab/parallel.hpp"
#include "cslab/particles.hpp"
#include "cslab/rng.hpp"

namespace cslab {

using json = nlohmann::ordered_json;

namespace {

/// Records a violation and keeps the first witness.
void fail(SuiteResult& r, const std::string& witness) {
    if (r.violations++ == 0) r.witness = witness;
}

void track_max(SuiteResult& r, const std::string& name, double v) {
    auto [it, inserted] = r.metrics.emplace(name, v);
    if (!inserted) it->second = std::max(it->second, v);
}

bool within(double lhs, double rhs, double tol) { return lhs <= rhs * (1.0 + tol); }

std::string describe(std::initializer_list<std::pair<const char*, double>> values) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : values) {
        os << (first ? "" : ", ") << k << " = " << format_double(v);
        first = false;
    }
    return os.str();
}

double log_uniform(StreamRng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

}  // namespace

SuiteResult kernel_bound_suite(std::size_t samples, std::uint64_t seed, double c_factor, double tolerance) {
    SuiteResult res;
    res.name = "kernel_bounds";
    StreamRng rng(substream(seed, "kernel_bounds"));
    for (std::size_t i = 0; i < samples; ++i) {
        const double r = log_uniform(rng, 1e-3, 1e3);
        const double eps = rng.uniform(1e-3, 1.0);
        const double lambda = rng.uniform(0.01, 0.49);
        const KernelParams p{lambda, eps, 1};
        const double phi = c_factor == 1.0
                               ? influence_scaled(r, p)
                               : PowerKernel(1.0, eps * eps, c_factor * p.c(), lambda)(r * r);
        const double phi0 = kernel_singular_majorant(r, p);
        const double gap = c_factor == 1.0 ? kernel_gap(r, p) : std::abs(phi - phi0);
        const auto where = [&](const char* item, double lhs, double rhs) {
            return std::string(item) + ": " +
                   describe({{"r", r}, {"eps", eps}, {"lambda", lambda}, {"lhs", lhs}, {"rhs", rhs}});
        };
        res.samples += 3;
        if (!within(phi, phi0, tolerance)) fail(res, where("singular_majorant", phi, phi0));
        const double reg = kernel_regular_majorant(p);
        if (!within(phi, reg, tolerance)) fail(res, where("regular_majorant", phi, reg));
        const double gb = kernel_gap_bound(r, p);
        if (!within(gap, gb, tolerance)) fail(res, where("gap_bound", gap, gb));
        track_max(res, "max_singular_ratio", phi / phi0);
        track_max(res, "max_regular_ratio", phi / reg);
        track_max(res, "max_gap_ratio", gap / gb);
    }
    return res;
}

SuiteResult defining_property_suite(std::size_t samples, std::uint64_t seed, double c_factor, double tolerance) {
    SuiteResult res;
    res.name = "half_value_at_range";
    StreamRng rng(substream(seed, "defining_property"));
    for (std::size_t i = 0; i < samples; ++i) {
        const double lambda = rng.uniform(0.01, 0.49);
        const KernelParams p{lambda, 1.0, 1};
        const double phi = c_factor == 1.0 ? influence_scaled(1.0, p) : PowerKernel(1.0, 1.0, c_factor * p.c(), lambda)(1.0);
        const double err = std::abs(phi - 0.5);
        ++res.samples;
        track_max(res, "max_abs_error", err);
        if (err > tolerance) fail(res, describe({{"lambda", lambda}, {"phi", phi}}));
    }
    return res;
}

SuiteResult h_kernel_suite(std::size_t samples, std::uint64_t seed, double tolerance) {
    SuiteResult res;
    res.name = "h_kernel_bounds";
    StreamRng rng(substream(seed, "h_kernel"));
    for (int dim = 1; dim <= 3; ++dim) {
        const auto tests = default_test_dictionary(dim);
        for (std::size_t i = 0; i < samples; ++i) {
            const auto& g = tests[i % tests.size()];
            Vec x{0.0, 0.0, 0.0}, y{0.0, 0.0, 0.0};
            for (int c = 0; c < dim; ++c) {
                x[static_cast<std::size_t>(c)] = rng.uniform(-3.0, 3.0);
                y[static_cast<std::size_t>(c)] = rng.uniform(-3.0, 3.0);
            }
            const double r = norm(x - y);
            if (r == 0.0) continue;
            const double lambda = rng.uniform(0.01, 0.49);
            const double eps = rng.uniform(1e-3, 1.0);
            const KernelParams p{lambda, eps, dim};
            const KernelParams p0{lambda, 0.0, dim};
            const Vec h = h_kernel(g, 0.0, x, y, p);
            const Vec h0 = h_kernel(g, 0.0, x, y, p0);
            const HKernelBounds b = h_kernel_bounds(g.lipschitz, r, p);
            const double hn = norm(h);
            const double gap = norm(h - h0);
            const auto where = [&](const char* item) {
                return std::string(item) + " (" + g.name + "): " +
                       describe({{"r", r}, {"eps", eps}, {"lambda", lambda}, {"dim", static_cast<double>(dim)}});
            };
            res.samples += 3;
            if (!within(hn, b.singular, tolerance)) fail(res, where("singular"));
            if (!within(hn, b.regular, tolerance)) fail(res, where("regular"));
            if (!within(gap, b.gap, tolerance)) fail(res, where("gap"));
            track_max(res, "max_singular_ratio", hn / b.singular);
            track_max(res, "max_regular_ratio", hn / b.regular);
            track_max(res, "max_gap_ratio", gap / b.gap);
        }
    }
    return res;
}

SuiteResult transport_suite(std::size_t nodes, double dt) {
    SuiteResult res;
    res.name = "transport_linear_flow";
    const GridSpec grid = make_cube_grid(1, 8.0, nodes);
    const auto levels = static_cast<std::size_t>(std::llround(1.0 / dt)) + 1;
    const VelocityField u = sample_velocity(grid, dt, levels, [](double, const Vec& x) { return x; });
    const auto rho0_fn = [](double x) { return std::exp(-2.0 * x * x); };
    const Field rho0 = sample_scalar(grid, [&](const Vec& x) { return rho0_fn(x[0]); });
    const std::size_t last = levels - 1;
    const double t = u.time(last);
    const DensityField rho = transport_pushforward(rho0, u, {last});
    const Field& r1 = rho.values.front();

    double err = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double x = grid.coordinate(a)[0];
        err = std::max(err, std::abs(r1(a) - rho0_fn(x * std::exp(-t)) * std::exp(-t)));
    }
    res.metrics["sup_error"] = err;
    ++res.samples;
    if (err >= 1e-3) fail(res, describe({{"sup_error", err}}));

    const double norm_u = u.l1_w1inf(last);
    res.metrics["velocity_l1_w1inf"] = norm_u;
    const double inf = std::numeric_limits<double>::infinity();
    for (double p : {1.0, 2.0, inf}) {
        const double conj = std::isinf(p) ? 1.0 : 1.0 - 1.0 / p;
        const double lhs = lp_norm(grid, r1, p);
        const double rhs = std::exp(conj * norm_u) * lp_norm(grid, rho0, p);
        const double tol = p == 1.0 ? 1e-6 : 1e-12;
        ++res.samples;
        const std::string key = std::isinf(p) ? "linf" : "l" + format_double(p);
        res.metrics[key + "_ratio"] = lhs / rhs;
        if (!within(lhs, rhs, tol)) fail(res, "lp_growth: " + describe({{"p", p}, {"lhs", lhs}, {"rhs", rhs}}));
    }
    res.metrics["mass_relative_error"] = std::abs(integrate(grid, r1) - integrate(grid, rho0)) / integrate(grid, rho0);

    double worst = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const Backtrace b = flow_backtrace(u, t, grid.coordinate(a));
        ++res.samples;
        worst = std::max(worst, std::abs(b.log_jacobian) / norm_u);
        if (!within(std::abs(b.log_jacobian), norm_u, 1e-12))
            fail(res, "jacobian: " + describe({{"x", grid.coordinate(a)[0]}, {"logJ", b.log_jacobian}}));
    }
    res.metrics["max_logj_ratio"] = worst;
    return res;
}

SuiteResult liouville_suite(std::size_t probes, std::uint64_t seed) {
    SuiteResult res;
    res.name = "liouville_determinant";
    const GridSpec grid = make_cube_grid(1, 8.0, 2049);
    const double dt = 0.01, t = 0.5;
    const VelocityField u = sample_velocity(grid, dt, 51, [](double, const Vec& x) { return Vec{std::sin(x[0]), 0.0, 0.0}; });
    StreamRng rng(substream(seed, "liouville"));
    const double delta = 1e-5;
    std::vector<double> errors(probes, 0.0);
    std::vector<double> xs(probes);
    for (auto& x : xs) x = rng.uniform(-6.0, 6.0);
    parallel_for(probes, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Backtrace b = flow_backtrace(u, t, Vec{xs[i], 0.0, 0.0});
            const double xp = flow_backtrace(u, t, Vec{xs[i] + delta, 0.0, 0.0}).x0[0];
            const double xm = flow_backtrace(u, t, Vec{xs[i] - delta, 0.0, 0.0}).x0[0];
            const double fd = (xp - xm) / (2.0 * delta);
            errors[i] = std::abs(std::exp(b.log_jacobian) - fd) / std::abs(fd);
        }
    });
    for (std::size_t i = 0; i < probes; ++i) {
        ++res.samples;
        track_max(res, "max_relative_error", errors[i]);
        if (!(errors[i] < 1e-3)) fail(res, describe({{"x", xs[i]}, {"relative_error", errors[i]}}));
    }
    return res;
}

SuiteResult commutator_nullity_suite(std::uint64_t seed, std::size_t shifts) {
    SuiteResult res;
    res.name = "commutator_nullity";
    StreamRng rng(substream(seed, "commutator_nullity"));
    for (int dim = 1; dim <= 2; ++dim) {
        const GridSpec grid = dim == 1 ? make_cube_grid(1, 4.0, 257) : make_cube_grid(2, 3.0, 41);
        const auto comps = static_cast<std::size_t>(dim);
        const CommutatorOperator op(grid, 0.25);
        const Field rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-norm_sq(x)); });
        Vec c0{0.0, 0.0, 0.0};
        for (std::size_t c = 0; c < comps; ++c) c0[c] = rng.uniform(-2.0, 2.0);
        const Field constant = sample_vector(grid, comps, [&](const Vec&) { return c0; });
        const double null_sup = lp_norm(grid, op.apply(rho, constant), std::numeric_limits<double>::infinity());
        ++res.samples;
        track_max(res, "constant_sup", null_sup);
        if (null_sup > 1e-12) fail(res, "constant u: " + describe({{"dim", static_cast<double>(dim)}, {"sup", null_sup}}));

        const Field u = sample_vector(grid, comps, [](const Vec& x) {
            return Vec{std::sin(x[0]) + 0.3 * x[1], std::cos(x[1]) * std::exp(-0.1 * x[0] * x[0]), 0.0};
        });
        const Field base = op.apply(rho, u);
        const double scale = lp_norm(grid, base, std::numeric_limits<double>::infinity());
        for (std::size_t s = 0; s < shifts; ++s) {
            Vec c{0.0, 0.0, 0.0};
            for (std::size_t k = 0; k < comps; ++k) c[k] = rng.uniform(-1.0, 1.0);
            Field shifted = u;
            for (std::size_t a = 0; a < grid.size(); ++a)
                for (std::size_t k = 0; k < comps; ++k) shifted(a, k) += c[k];
            const Field out = op.apply(rho, shifted);
            double diff = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) diff = std::max(diff, std::abs(out.data[i] - base.data[i]));
            const double rel = diff / scale;
            ++res.samples;
            track_max(res, "shift_relative_difference", rel);
            if (rel > 1e-12) fail(res, "shift: " + describe({{"dim", static_cast<double>(dim)}, {"c1", c[0]}, {"rel", rel}}));
        }
    }
    return res;
}

SuiteResult commutator_ratio_suite(const SolverConfig& cfg, double spread_limit, double invariance_tol) {
    SuiteResult res;
    res.name = "commutator_ratios";
    const GridSpec grid = make_cube_grid(1, 24.0, 961);
    std::vector<double> dilations;
    for (int i = 0; i < 10; ++i) dilations.push_back(0.25 * std::pow(16.0, i / 9.0));
    const std::vector<std::pair<double, double>> amps{{1.0, 1.0}, {2.0, 0.5}, {0.1, 7.0}, {10.0, 3.0}, {0.5, 0.25}};
    SolverConfig c = cfg;
    c.grid = grid;
    const auto samples = dilation_family(grid, dilations, amps);
    const CommutatorRatioReport rep = verify_commutator_estimates(samples, grid, c, spread_limit);
    res.metrics["pairs"] = static_cast<double>(samples.size());
    res.metrics["spread_w1inf"] = rep.spread_w1inf;
    res.metrics["spread_low"] = rep.spread_low;
    res.metrics["spread_high"] = rep.spread_high;
    res.samples += 3;
    if (rep.spread_w1inf > spread_limit) fail(res, describe({{"spread_w1inf", rep.spread_w1inf}}));
    if (rep.spread_low > spread_limit) fail(res, describe({{"spread_low", rep.spread_low}}));
    if (rep.spread_high > spread_limit) fail(res, describe({{"spread_high", rep.spread_high}}));
    const std::size_t na = amps.size();
    double worst = 0.0;
    for (std::size_t d = 0; d < dilations.size(); ++d) {
        const auto& ref = rep.samples[d * na];
        for (std::size_t a = 1; a < na; ++a) {
            const auto& s = rep.samples[d * na + a];
            for (auto [x, y] : {std::pair{s.ratio_w1inf(), ref.ratio_w1inf()}, std::pair{s.ratio_low(), ref.ratio_low()},
                                std::pair{s.ratio_high(), ref.ratio_high()}}) {
                const double rel = std::abs(x - y) / std::abs(y);
                worst = std::max(worst, rel);
                ++res.samples;
                if (rel > invariance_tol) fail(res, "amplitude invariance: " + s.label + ", rel = " + format_double(rel));
            }
        }
    }
    res.metrics["amplitude_invariance"] = worst;
    return res;
}

std::vector<Verdict> sweep_verdicts(const SweepReport& report, const SweepChecks& checks) {
    std::vector<Verdict> out;
    if (!checks.bounds.empty()) {
        const bool all = std::find(checks.bounds.begin(), checks.bounds.end(), "all") != checks.bounds.end();
        std::vector<Verdict> selected;
        for (auto& v : verify_apriori_bounds(report, checks.options)) {
            const bool keep = all || std::any_of(checks.bounds.begin(), checks.bounds.end(), [&](const std::string& p) {
                                  return v.name.rfind(p, 0) == 0;
                              });
            if (keep) selected.push_back(std::move(v));
        }
        if (!checks.require_all_seeds) selected = aggregate_over_seeds(selected);
        out.insert(out.end(), selected.begin(), selected.end());
    }
    if (checks.friction_hypotheses) {
        if (report.scaling.kind != ScalingKind::generalized_friction)
            throw ConfigError("[sweep] friction_hypotheses needs the generalized_friction scaling");
        for (auto& v : check_friction_hypotheses(report.scaling, report.eps_list)) out.push_back(std::move(v));
    }
    if (checks.fit_quantity) {
        const DecayFit fit = fit_decay_rate(report, run_quantity(*checks.fit_quantity, report));
        out.push_back(make_verdict("decay_rate_" + *checks.fit_quantity, 0.0, 0, checks.fit_min_slope, fit.slope, 0.0));
    }
    if (checks.rh_limit) {
        auto rows = rh_limit_quantities(report);
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.epsilon > b.epsilon; });
        if (rows.size() < checks.monotone_points) throw ConfigError("[sweep] rh_limit needs monotone_points eps values");
        const std::size_t first = rows.size() - checks.monotone_points;
        for (std::size_t i = first + 1; i < rows.size(); ++i) {
            for (auto [name, prev, cur] : {std::tuple{"theta_decreasing", rows[i - 1].theta, rows[i].theta},
                                           std::tuple{"q_minus_j_decreasing", rows[i - 1].q_minus_j, rows[i].q_minus_j}}) {
                Verdict v;
                v.name = name;
                v.epsilon = rows[i].epsilon;
                v.lhs = cur;
                v.rhs = prev;
                v.pass = cur < prev;
                out.push_back(v);
            }
        }
    }
    return out;
}

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json verdict_json(const Verdict& v) {
    return {{"name", v.name}, {"epsilon", v.epsilon}, {"seed", v.seed}, {"lhs", v.lhs},
            {"rhs", v.rhs},   {"tolerance", v.tolerance}, {"pass", v.pass}};
}

json potential_json(const PotentialSpec& p) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PotentialZero>) return {{"kind", "zero"}};
            else if constexpr (std::is_same_v<T, PotentialQuadratic>) return {{"kind", "quadratic"}, {"stiffness", v.stiffness}};
            else if constexpr (std::is_same_v<T, PotentialGaussianWell>)
                return {{"kind", "gaussian_well"}, {"depth", v.depth}, {"width", v.width}};
            else return {{"kind", "uniform_shear"}, {"slope", {v.slope[0], v.slope[1], v.slope[2]}}};
        },
        p);
}

/// Artifact writer plus the bookkeeping every command shares.
class Session {
public:
    explicit Session(const ExperimentConfig& cfg)
        : cfg_(cfg), writer_(cfg.output_dir), start_(std::chrono::steady_clock::now()) {
        const std::string text = serialize_config(cfg);
        hash_ = sha256_hex(text);
        writer_.write("config.ini", text);
    }
    ArtifactWriter& writer() { return writer_; }
    void finish() {
        std::optional<double> wall;
        if (cfg_.record_wall_clock)
            wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        writer_.write_manifest(hash_, wall);
    }

private:
    const ExperimentConfig& cfg_;
    ArtifactWriter writer_;
    std::string hash_;
    std::chrono::steady_clock::time_point start_;
};

double kinetic_energy(const ParticleEnsemble& s) {
    double e = 0.0;
    for (const Vec& v : s.velocities) e += norm_sq(v);
    return 0.5 * s.weight * e;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& config, std::ostream& log) {
    if (!config.simulation) throw ConfigError("simulate needs a [model] section");
    const SimulationSection& sim = *config.simulation;
    ModelSpec spec = sim.model;
    spec.seed = substream(config.seed, "model");
    ScalingSpec scaling = sim.scaling;
    const auto steps = static_cast<std::size_t>(std::llround(sim.horizon / sim.dt));
    if (steps == 0) throw ConfigError("[model] horizon / dt must give at least one step");

    ParticleEnsemble state = sample_uniform_ensemble(sim.particles, sim.dim, sim.mass, sim.position_half_width,
                                                     sim.velocity_half_width, substream(config.seed, "initial"));
    std::vector<std::string> th{"step", "time", "particle"};
    for (int c = 0; c < sim.dim; ++c) th.push_back("x" + std::to_string(c));
    for (int c = 0; c < sim.dim; ++c) th.push_back("v" + std::to_string(c));
    CsvTable traj(th);
    std::vector<std::string> dh{"step", "time", "position_diameter", "velocity_diameter"};
    for (int c = 0; c < sim.dim; ++c) dh.push_back("mean_v" + std::to_string(c));
    dh.insert(dh.end(), {"kinetic_fluctuation", "kinetic_energy", "total_mass"});
    CsvTable diag(dh);

    const auto dim = static_cast<std::size_t>(sim.dim);
    auto record = [&](const ParticleEnsemble& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            traj.cell(static_cast<std::uint64_t>(s.step)).cell(s.time).cell(static_cast<std::uint64_t>(i));
            for (std::size_t c = 0; c < dim; ++c) traj.cell(s.positions[i][c]);
            for (std::size_t c = 0; c < dim; ++c) traj.cell(s.velocities[i][c]);
            traj.end_row();
        }
        const FlockingDiagnostics d = flocking_diagnostics(s);
        diag.cell(static_cast<std::uint64_t>(s.step)).cell(s.time).cell(d.position_diameter).cell(d.velocity_diameter);
        for (std::size_t c = 0; c < dim; ++c) diag.cell(d.mean_velocity[c]);
        diag.cell(d.kinetic_fluctuation).cell(kinetic_energy(s)).cell(s.total_mass());
        diag.end_row();
    };
    record(state);
    const FlockingDiagnostics initial = flocking_diagnostics(state);
    for (std::size_t n = 1; n <= steps; ++n) {
        state = step_model(state, spec, scaling, sim.dt);
        if (n % sim.record_every == 0 || n == steps) record(state);
    }
    const FlockingDiagnostics final_diag = flocking_diagnostics(state);

    Session session(config);
    session.writer().write("trajectory.csv", traj.text());
    session.writer().write("diagnostics.csv", diag.text());
    json summary{{"schema_version", kSchemaVersion}, {"command", "simulate"},
                 {"seed", config.seed},
                 {"steps", steps},
                 {"particles", sim.particles},
                 {"final_time", state.time},
                 {"initial_velocity_diameter", initial.velocity_diameter},
                 {"final_velocity_diameter", final_diag.velocity_diameter},
                 {"initial_position_diameter", initial.position_diameter},
                 {"final_position_diameter", final_diag.position_diameter},
                 {"final_kinetic_energy", kinetic_energy(state)}};
    session.writer().write("summary.json", dump(summary));
    session.finish();
    log << "simulate: " << steps << " steps, velocity diameter " << format_double(initial.velocity_diameter) << " -> "
        << format_double(final_diag.velocity_diameter) << "\n";
    return kExitOk;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& log) {
    if (!config.sweep) throw ConfigError("sweep needs a [sweep] section");
    const SweepSection& sec = *config.sweep;
    const SweepReport report = run_sweep(sec.config);
    const std::vector<Verdict> verdicts = sweep_verdicts(report, sec.checks);

    Session session(config);
    CsvTable runs({"epsilon", "seed", "k", "alpha", "dt", "steps", "M0", "E0", "F0", "integrated_dissipation",
                   "commutator_l2l1"});
    for (const auto& r : report.runs) {
        runs.cell(r.epsilon).cell(r.seed).cell(r.k).cell(r.alpha).cell(r.dt).cell(static_cast<std::uint64_t>(r.steps));
        runs.cell(r.budget.M0).cell(r.budget.E0).cell(r.budget.F0).cell(r.integrated_dissipation()).cell(r.commutator_l2l1());
        runs.end_row();
    }
    session.writer().write("runs.csv", runs.text());
    if (sec.write_series) {
        for (std::size_t e = 0; e < report.eps_list.size(); ++e) {
            for (std::size_t s = 0; s < report.seeds.size(); ++s) {
                const RunRecord& r = report.run(e, s);
                const auto cols = r.series.columns();
                std::vector<std::string> head;
                for (const auto& [name, col] : cols)
                    if (col->size() == r.series.size()) head.push_back(name);
                CsvTable t(head);
                for (std::size_t i = 0; i < r.series.size(); ++i) {
                    for (const auto& [name, col] : cols)
                        if (col->size() == r.series.size()) t.cell((*col)[i]);
                    t.end_row();
                }
                session.writer().write("series/eps" + std::to_string(e) + "_seed" + std::to_string(r.seed) + ".csv",
                                       t.text());
            }
        }
    }
    CsvTable vt({"name", "epsilon", "seed", "lhs", "rhs", "tolerance", "pass"});
    json failing = json::array();
    for (const auto& v : verdicts) {
        vt.cell(v.name).cell(v.epsilon).cell(v.seed).cell(v.lhs).cell(v.rhs).cell(v.tolerance).cell(v.pass ? "true" : "false");
        vt.end_row();
        if (!v.pass) failing.push_back(verdict_json(v));
    }
    session.writer().write("verdicts.csv", vt.text());
    json rep{{"schema_version", kSchemaVersion}, {"command", "sweep"},
             {"scaling", to_string(report.scaling.kind)},
             {"gamma", report.scaling.gamma},
             {"lambda", report.scaling.lambda},
             {"eps", report.eps_list},
             {"seeds", report.seeds},
             {"verdict_count", verdicts.size()},
             {"failing", failing}};
    if (sec.checks.fit_quantity) {
        const DecayFit fit = fit_decay_rate(report, run_quantity(*sec.checks.fit_quantity, report));
        rep["fit"] = {{"quantity", *sec.checks.fit_quantity}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    }
    json cauchy = json::array();
    for (const auto& row : commutator_cauchy_test(report))
        cauchy.push_back({{"eps_a", row.eps_a}, {"eps_b", row.eps_b}, {"deviations", row.deviations}});
    rep["tests"] = report.test_names;
    rep["cauchy"] = cauchy;
    if (report.scaling.kind == ScalingKind::generalized_friction) {
        json rows = json::array();
        for (const auto& r : rh_limit_quantities(report))
            rows.push_back({{"epsilon", r.epsilon}, {"k", r.k}, {"theta", r.theta}, {"q_minus_j", r.q_minus_j},
                            {"p", r.p}, {"q", r.q}, {"r", r.r}});
        rep["rh_limit"] = rows;
    }
    session.writer().write("report.json", dump(rep));
    session.finish();
    log << "sweep: " << report.runs.size() << " runs, " << verdicts.size() << " verdicts, " << failing.size()
        << " failing\n";
    for (const auto& f : failing)
        log << "  FAIL " << f["name"].get<std::string>() << " eps=" << format_double(f["epsilon"].get<double>())
            << " lhs=" << format_double(f["lhs"].get<double>()) << " rhs=" << format_double(f["rhs"].get<double>()) << "\n";
    return failing.empty() ? kExitOk : kExitVerdict;
}

namespace {

CsvTable iteration_table(const PicardReport& r) {
    CsvTable t({"iteration", "norm", "difference", "ratio", "in_ball"});
    for (const auto& it : r.iterations) {
        t.cell(static_cast<std::uint64_t>(it.index)).cell(it.norm).cell(it.difference).cell(it.ratio);
        t.cell(it.in_ball ? "true" : "false");
        t.end_row();
    }
    return t;
}

json picard_json(const PicardReport& r) {
    json ratios = json::array();
    for (const auto& it : r.iterations) ratios.push_back(it.ratio);
    return {{"converged", r.converged},       {"iterations", r.iterations.size()},
            {"all_in_ball", r.all_in_ball},   {"max_ratio", r.max_ratio},
            {"ratios", ratios},               {"continuity_residual", r.continuity_residual},
            {"closure_residual", r.closure_residual}, {"mass_drift", r.mass_drift}};
}

}  // namespace

int cmd_solve_macro(const ExperimentConfig& config, std::ostream& log) {
    if (!config.macro) throw ConfigError("solve-macro needs a [macrosolver] section");
    const MacroSection& sec = *config.macro;
    const Field rho0 = sec.initial_density();
    const SmallnessReport small = check_smallness(rho0, sec.potential, sec.solver);
    json smallness{{"grad_psi_norm", small.grad_psi_norm},
                   {"rho0_norm", small.rho0_norm},
                   {"theta_low", small.theta_low},
                   {"theta_high", small.theta_high},
                   {"verdict", small.verdict}};

    Session session(config);
    try {
        const PicardResult res = picard_solve(rho0, sec.potential, sec.solver);
        session.writer().write("iterations.csv", iteration_table(res.report).text());
        const GridSpec& g = sec.solver.grid;
        std::vector<std::string> head{"level", "time", "node"};
        for (int c = 0; c < g.dim; ++c) head.push_back("x" + std::to_string(c));
        head.push_back("rho");
        for (int c = 0; c < g.dim; ++c) head.push_back("u" + std::to_string(c));
        CsvTable fields(head);
        const std::size_t levels = res.u.level_count();
        for (std::size_t m = 0; m < levels; ++m) {
            if (m % sec.field_stride != 0 && m + 1 != levels) continue;
            for (std::size_t a = 0; a < g.size(); ++a) {
                const Vec x = g.coordinate(a);
                fields.cell(static_cast<std::uint64_t>(m)).cell(res.u.time(m)).cell(static_cast<std::uint64_t>(a));
                for (int c = 0; c < g.dim; ++c) fields.cell(x[static_cast<std::size_t>(c)]);
                fields.cell(res.rho.values[m](a));
                for (int c = 0; c < g.dim; ++c) fields.cell(res.u.level(m)(a, static_cast<std::size_t>(c)));
                fields.end_row();
            }
        }
        session.writer().write("fields.csv", fields.text());
        json rep{{"schema_version", kSchemaVersion}, {"command", "solve-macro"}, {"potential", potential_json(sec.potential)}, {"picard", picard_json(res.report)},
                 {"smallness", smallness}};
        session.writer().write("report.json", dump(rep));
        session.finish();
        log << "solve-macro: " << res.report.iterations.size() << " iterations, max ratio "
            << format_double(res.report.max_ratio) << ", residuals " << format_double(res.report.continuity_residual)
            << " / " << format_double(res.report.closure_residual) << (res.report.converged ? "" : ", not converged")
            << "\n";
        return res.report.converged ? kExitOk : kExitRuntime;
    } catch (const PicardFailure& e) {
        session.writer().write("iterations.csv", iteration_table(e.report()).text());
        json rep{{"schema_version", kSchemaVersion}, {"command", "solve-macro"},
                 {"failure", e.kind() == PicardFailure::Kind::ball_exit ? "ball_exit" : "non_contraction"},
                 {"message", e.what()},
                 {"picard", picard_json(e.report())},
                 {"smallness", smallness}};
        session.writer().write("report.json", dump(rep));
        session.finish();
        log << "solve-macro: " << e.what() << "\n";
        return kExitNonContraction;
    }
}

int cmd_verify(const ExperimentConfig& config, std::ostream& log) {
    if (!config.verify) throw ConfigError("verify needs a [verify] section");
    const VerifySection& v = *config.verify;
    std::vector<SuiteResult> results;
    if (v.kernel_samples) results.push_back(kernel_bound_suite(v.kernel_samples, config.seed, v.kernel_c_factor));
    if (v.defining_samples) results.push_back(defining_property_suite(v.defining_samples, config.seed, v.kernel_c_factor));
    if (v.h_kernel_samples) results.push_back(h_kernel_suite(v.h_kernel_samples, config.seed));
    if (v.transport) results.push_back(transport_suite());
    if (v.liouville) results.push_back(liouville_suite(512, config.seed));
    if (v.commutator) results.push_back(commutator_nullity_suite(config.seed));
    if (v.commutator_ratios) results.push_back(commutator_ratio_suite(config.macro ? config.macro->solver : SolverConfig{}));

    Session session(config);
    CsvTable t({"suite", "samples", "violations", "pass"});
    json suites = json::array();
    bool ok = true;
    for (const auto& r : results) {
        t.cell(r.name).cell(static_cast<std::uint64_t>(r.samples)).cell(static_cast<std::uint64_t>(r.violations));
        t.cell(r.pass() ? "true" : "false");
        t.end_row();
        json metrics = json::object();
        for (const auto& [k, val] : r.metrics) metrics[k] = val;
        suites.push_back({{"name", r.name}, {"samples", r.samples}, {"violations", r.violations},
                          {"witness", r.witness}, {"metrics", metrics}});
        ok = ok && r.pass();
        log << "verify " << r.name << ": " << r.samples << " checks, " << r.violations << " violations";
        if (!r.pass()) log << "; first: " << r.witness;
        log << "\n";
    }
    session.writer().write("suites.csv", t.text());
    session.writer().write("verify.json", dump(json{{"schema_version", kSchemaVersion}, {"command", "verify"}, {"suites", suites}}));
    session.finish();
    return ok ? kExitOk : kExitVerdict;
}

int run_command(const std::string& command, const std::filesystem::path& config_path, const CommandOptions& options,
                std::ostream& log) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (options.seed) cfg.seed = *options.seed;
        if (options.out) cfg.output_dir = *options.out;
        set_worker_count(options.jobs);
        if (command == "simulate") return cmd_simulate(cfg, log);
        if (command == "sweep") return cmd_sweep(cfg, log);
        if (command == "solve-macro") return cmd_solve_macro(cfg, log);
        if (command == "verify") return cmd_verify(cfg, log);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InconsistencyError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PicardFailure& e) {
        log << "macrosolver: " << e.what() << "\n";
        return kExitNonContraction;
    } catch (const std::exception& e) {
        log << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace cslab
