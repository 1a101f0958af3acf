#include "cslab/particles.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <optional>
#include <string>

#include "cslab/errors.hpp"
#include "cslab/parallel.hpp"
#include "cslab/rng.hpp"

namespace cslab {

void ParticleEnsemble::validate() const {
    if (dim < 1 || dim > 3) throw DomainError("ensemble dim must be 1, 2 or 3");
    if (positions.empty()) throw DomainError("ensemble needs at least one particle");
    if (positions.size() != velocities.size()) throw DomainError("positions and velocities differ in length");
    if (!(weight > 0.0) || !std::isfinite(weight)) throw DomainError("particle weight must be positive");
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (int c = 0; c < dim; ++c)
            if (!std::isfinite(positions[i][c]) || !std::isfinite(velocities[i][c]))
                throw DomainError("non-finite coordinate at particle " + std::to_string(i));
}

ParticleEnsemble sample_uniform_ensemble(std::size_t n, int dim, double mass, double pos_half,
                                         double vel_half, std::uint64_t stream_key) {
    if (n == 0) throw ConfigError("particle count must be >= 1");
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    if (!(mass > 0.0)) throw ConfigError("total mass must be > 0");
    ParticleEnsemble e;
    e.dim = dim;
    e.weight = mass / static_cast<double>(n);
    e.positions.assign(n, Vec{0.0, 0.0, 0.0});
    e.velocities.assign(n, Vec{0.0, 0.0, 0.0});
    StreamRng rng(stream_key);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < dim; ++c) e.positions[i][c] = rng.uniform(-pos_half, pos_half);
        for (int c = 0; c < dim; ++c) e.velocities[i][c] = rng.uniform(-vel_half, vel_half);
    }
    return e;
}

double friction_rate(const FrictionSpec& f, double speed) {
    struct Visitor {
        double speed;
        double operator()(const FrictionNone&) const { return 0.0; }
        double operator()(const FrictionLinear& l) const { return l.mu; }
        double operator()(const FrictionGeneralized& g) const {
            return g.beta * std::pow(speed, g.k) - g.alpha;
        }
    };
    return std::visit(Visitor{speed}, f);
}

double potential_value(const PotentialSpec& p, double, const Vec& x) {
    struct Visitor {
        const Vec& x;
        double operator()(const PotentialZero&) const { return 0.0; }
        double operator()(const PotentialQuadratic& q) const { return 0.5 * q.stiffness * norm_sq(x); }
        double operator()(const PotentialGaussianWell& g) const {
            return -g.depth * std::exp(-norm_sq(x) / (2.0 * g.width * g.width));
        }
        double operator()(const PotentialUniformShear& s) const { return dot(s.slope, x); }
    };
    return std::visit(Visitor{x}, p);
}

Vec potential_gradient(const PotentialSpec& p, double, const Vec& x) {
    struct Visitor {
        const Vec& x;
        Vec operator()(const PotentialZero&) const { return {0.0, 0.0, 0.0}; }
        Vec operator()(const PotentialQuadratic& q) const { return q.stiffness * x; }
        Vec operator()(const PotentialGaussianWell& g) const {
            const double w2 = g.width * g.width;
            return (g.depth / w2 * std::exp(-norm_sq(x) / (2.0 * w2))) * x;
        }
        Vec operator()(const PotentialUniformShear& s) const { return s.slope; }
    };
    return std::visit(Visitor{x}, p);
}

void ModelSpec::validate() const {
    const auto& k = kernel;
    if (const auto* kp = std::get_if<KernelParams>(&k)) {
        if (!(kp->lambda > 0.0)) throw ConfigError("kernel lambda must be > 0");
        if (!(kp->epsilon >= 0.0)) throw ConfigError("kernel epsilon must be >= 0");
    } else if (const auto* dk = std::get_if<DimensionalKernelParams>(&k)) {
        dk->validate();
    } else if (const auto* ck = std::get_if<KernelClassical>(&k)) {
        if (!(ck->lambda > 0.0)) throw ConfigError("kernel lambda must be > 0");
    }
    if (!(diffusion >= 0.0)) throw ConfigError("diffusion must be >= 0");
    if (!(particle_mass > 0.0)) throw ConfigError("particle mass must be > 0");
    if (!(controls.max_velocity_growth > 1.0)) throw ConfigError("max_velocity_growth must exceed 1");
    if (!(controls.safety_box > 0.0)) throw ConfigError("safety_box must be > 0");
    if (!(controls.stiffness_fraction > 0.0)) throw ConfigError("stiffness_fraction must be > 0");
    switch (model) {
        case ModelKind::cucker_smale:
        case ModelKind::motsch_tadmor:
            if (diffusion != 0.0) throw ConfigError("deterministic models require diffusion = 0");
            if (!std::holds_alternative<FrictionNone>(friction))
                throw ConfigError("deterministic models require friction = none");
            if (particle_mass != 1.0) throw ConfigError("particle mass is only configurable for langevin");
            break;
        case ModelKind::langevin: {
            const auto* lin = std::get_if<FrictionLinear>(&friction);
            if (!lin) throw ConfigError("langevin requires linear friction");
            if (!(lin->mu >= 0.0)) throw ConfigError("friction mu must be >= 0");
            break;
        }
        case ModelKind::scaled:
            if (particle_mass != 1.0) throw ConfigError("particle mass is only configurable for langevin");
            break;
    }
}

namespace {

struct Soa {
    std::size_t n = 0;
    std::vector<double> x[3];
    std::vector<double> v[3];
};

Soa to_soa(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim) {
    Soa s;
    s.n = x.size();
    for (int c = 0; c < dim; ++c) {
        s.x[c].resize(s.n);
        s.v[c].resize(s.n);
        for (std::size_t i = 0; i < s.n; ++i) {
            s.x[c][i] = x[i][c];
            s.v[c][i] = v[i][c];
        }
    }
    return s;
}

struct QuarterPower {
    double pre, shift, scale;
    double operator()(double r2) const { return pre / std::sqrt(std::sqrt(shift + scale * r2)); }
};
struct HalfPower {
    double pre, shift, scale;
    double operator()(double r2) const { return pre / std::sqrt(shift + scale * r2); }
};
struct GeneralPower {
    double pre, shift, scale, lambda;
    double operator()(double r2) const { return pre * std::pow(shift + scale * r2, -lambda); }
};

// Accumulates sum_j phi_ij (v_j - v_i) and sum_j phi_ij over j in [lo, hi).
// Four interleaved partial sums keep the kernel evaluations independent; the lanes are
// combined in a fixed order, so results do not depend on the thread count.
template <int D, class K>
inline void accumulate_range(const Soa& s, std::size_t i, std::size_t lo, std::size_t hi, const K& kern,
                             double* acc, double& total) {
    constexpr int L = 4;
    double xi[D], vi[D];
    for (int c = 0; c < D; ++c) {
        xi[c] = s.x[c][i];
        vi[c] = s.v[c][i];
    }
    double a[D][L] = {};
    double t[L] = {};
    std::size_t j = lo;
    for (; j + L <= hi; j += L) {
        double r2[L] = {};
        for (int c = 0; c < D; ++c) {
            for (int l = 0; l < L; ++l) {
                const double d = s.x[c][j + l] - xi[c];
                r2[l] += d * d;
            }
        }
        double phi[L];
        for (int l = 0; l < L; ++l) phi[l] = kern(r2[l]);
        for (int l = 0; l < L; ++l) t[l] += phi[l];
        for (int c = 0; c < D; ++c)
            for (int l = 0; l < L; ++l) a[c][l] += phi[l] * (s.v[c][j + l] - vi[c]);
    }
    for (int l = 0; j < hi; ++j, ++l) {
        double r2 = 0.0;
        for (int c = 0; c < D; ++c) {
            const double d = s.x[c][j] - xi[c];
            r2 += d * d;
        }
        const double phi = kern(r2);
        t[l] += phi;
        for (int c = 0; c < D; ++c) a[c][l] += phi * (s.v[c][j] - vi[c]);
    }
    for (int c = 0; c < D; ++c) acc[c] += (a[c][0] + a[c][1]) + (a[c][2] + a[c][3]);
    total += (t[0] + t[1]) + (t[2] + t[3]);
}

// Row i of the alignment sum with j = i excluded, so singular kernels stay finite.
template <int D, class K>
void alignment_rows(const Soa& s, const K& kern, std::vector<Vec>& sums, std::vector<double>& totals) {
    parallel_for(s.n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double acc[D] = {};
            double total = 0.0;
            accumulate_range<D>(s, i, 0, i, kern, acc, total);
            accumulate_range<D>(s, i, i + 1, s.n, kern, acc, total);
            Vec out{0.0, 0.0, 0.0};
            for (int c = 0; c < D; ++c) out[c] = acc[c];
            sums[i] = out;
            totals[i] = total;
        }
    });
}

template <int D>
void dispatch_power(const Soa& s, const PowerKernel& k, std::vector<Vec>& sums, std::vector<double>& totals) {
    if (k.lambda() == 0.25)
        alignment_rows<D>(s, QuarterPower{k.prefactor(), k.shift(), k.scale()}, sums, totals);
    else if (k.lambda() == 0.5)
        alignment_rows<D>(s, HalfPower{k.prefactor(), k.shift(), k.scale()}, sums, totals);
    else
        alignment_rows<D>(s, GeneralPower{k.prefactor(), k.shift(), k.scale(), k.lambda()}, sums, totals);
}

std::optional<PowerKernel> power_kernel(const InteractionKernel& kernel) {
    struct Visitor {
        std::optional<PowerKernel> operator()(const KernelNone&) const { return std::nullopt; }
        std::optional<PowerKernel> operator()(const KernelClassical& k) const { return PowerKernel::classical(k.lambda); }
        std::optional<PowerKernel> operator()(const KernelParams& k) const { return PowerKernel::scaled(k); }
        std::optional<PowerKernel> operator()(const DimensionalKernelParams& k) const {
            return PowerKernel::dimensional(k);
        }
    };
    return std::visit(Visitor{}, kernel);
}

// Off-diagonal sums S_i = sum_{j != i} phi_ij (v_j - v_i) and Z_i = sum_{j != i} phi_ij.
void pair_sums(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim, const PowerKernel& k,
               std::vector<Vec>& sums, std::vector<double>& totals) {
    const Soa s = to_soa(x, v, dim);
    sums.assign(s.n, Vec{0.0, 0.0, 0.0});
    totals.assign(s.n, 0.0);
    switch (dim) {
        case 1: dispatch_power<1>(s, k, sums, totals); break;
        case 2: dispatch_power<2>(s, k, sums, totals); break;
        default: dispatch_power<3>(s, k, sums, totals); break;
    }
}

void check_state(const ParticleEnsemble& before, const ParticleEnsemble& after, const StepControls& ctl) {
    const int n = before.dim;
    for (std::size_t i = 0; i < after.size(); ++i) {
        const double old_speed = norm(before.velocities[i]);
        const double new_speed = norm(after.velocities[i]);
        if (!std::isfinite(new_speed) || new_speed > ctl.max_velocity_growth * std::max(old_speed, ctl.velocity_floor))
            throw StepRejectedError("velocity of particle " + std::to_string(i) + " grew from " +
                                    std::to_string(old_speed) + " to " + std::to_string(new_speed) +
                                    " in one step; reduce dt");
        for (int c = 0; c < n; ++c)
            if (!(std::fabs(after.positions[i][c]) <= ctl.safety_box))
                throw EscapeError("particle " + std::to_string(i) + " left the safety box at t = " +
                                  std::to_string(after.time));
    }
}

using Accel = std::vector<Vec>;

// One RK4 step of dx = v, dv = accel(x, v).
template <class AccelFn>
ParticleEnsemble rk4_step(const ParticleEnsemble& s, double dt, AccelFn&& accel) {
    const std::size_t n = s.size();
    auto axpy = [n](const std::vector<Vec>& base, const std::vector<Vec>& dir, double h) {
        std::vector<Vec> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + h * dir[i];
        return out;
    };
    const auto& x0 = s.positions;
    const auto& v0 = s.velocities;
    const Accel a1 = accel(x0, v0);
    const auto x2 = axpy(x0, v0, 0.5 * dt);
    const auto v2 = axpy(v0, a1, 0.5 * dt);
    const Accel a2 = accel(x2, v2);
    const auto x3 = axpy(x0, v2, 0.5 * dt);
    const auto v3 = axpy(v0, a2, 0.5 * dt);
    const Accel a3 = accel(x3, v3);
    const auto x4 = axpy(x0, v3, dt);
    const auto v4 = axpy(v0, a3, dt);
    const Accel a4 = accel(x4, v4);

    ParticleEnsemble out = s;
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.positions[i] = x0[i] + w * (v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
        out.velocities[i] = v0[i] + w * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    }
    out.time = s.time + dt;
    out.step = s.step + 1;
    return out;
}

void require_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
}

}  // namespace

std::vector<Vec> alignment_field(const std::vector<Vec>& x, const std::vector<Vec>& v, int dim,
                                 double weight, const InteractionKernel& kernel) {
    const auto pk = power_kernel(kernel);
    std::vector<Vec> out(x.size(), Vec{0.0, 0.0, 0.0});
    if (!pk) return out;
    std::vector<Vec> sums;
    std::vector<double> totals;
    pair_sums(x, v, dim, *pk, sums, totals);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = weight * sums[i];
    return out;
}

ParticleEnsemble step_cucker_smale(const ParticleEnsemble& state, const ModelSpec& spec, double dt) {
    require_dt(dt);
    state.validate();
    auto accel = [&](const std::vector<Vec>& x, const std::vector<Vec>& v) {
        return alignment_field(x, v, state.dim, state.weight, spec.kernel);
    };
    ParticleEnsemble out = rk4_step(state, dt, accel);
    check_state(state, out, spec.controls);
    return out;
}

ParticleEnsemble step_motsch_tadmor(const ParticleEnsemble& state, const ModelSpec& spec, double dt) {
    require_dt(dt);
    state.validate();
    const auto pk = power_kernel(spec.kernel);
    if (pk && pk->singular()) throw DomainError("Motsch–Tadmor weights need a kernel finite at the origin");
    auto accel = [&](const std::vector<Vec>& x, const std::vector<Vec>& v) {
        std::vector<Vec> out(x.size(), Vec{0.0, 0.0, 0.0});
        if (!pk) return out;
        std::vector<Vec> sums;
        std::vector<double> totals;
        pair_sums(x, v, state.dim, *pk, sums, totals);
        const double self = (*pk)(0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = totals[i] + self;
            if (!(z >= DBL_MIN))
                throw NormalizationError("Motsch–Tadmor normalization underflow at particle " + std::to_string(i));
            out[i] = (spec.alignment_strength / z) * sums[i];
        }
        return out;
    };
    ParticleEnsemble out = rk4_step(state, dt, accel);
    check_state(state, out, spec.controls);
    return out;
}

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& state, const InteractionKernel& kernel,
                                     const SdeCoefficients& k, const PotentialSpec& potential,
                                     std::uint64_t noise_key, const StepControls& controls, double dt,
                                     std::vector<Vec>* alignment_out) {
    require_dt(dt);
    state.validate();
    const std::size_t n = state.size();
    const int dim = state.dim;
    std::vector<Vec> align(n, Vec{0.0, 0.0, 0.0});
    if (k.alignment_scale != 0.0 || alignment_out)
        align = alignment_field(state.positions, state.velocities, dim, state.weight, kernel);
    if (alignment_out) *alignment_out = align;

    ParticleEnsemble out = state;
    const double sqdt = std::sqrt(dt);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vec& x = state.positions[i];
            const Vec& v = state.velocities[i];
            const double mu = friction_rate(k.friction, norm(v));
            const Vec grad = potential_gradient(potential, state.time, x);
            Vec vn{0.0, 0.0, 0.0}, xn{0.0, 0.0, 0.0};
            for (int c = 0; c < dim; ++c) {
                const double drift = -k.friction_scale * mu * v[c] + k.alignment_scale * align[i][c] -
                                     k.force_scale * grad[c];
                double vc = v[c] + dt * drift;
                if (k.noise != 0.0)
                    vc += k.noise * sqdt * counter_normal(noise_key, state.step, i, static_cast<std::uint64_t>(c));
                vn[c] = vc;
                xn[c] = x[c] + dt * k.position_rate * v[c];
            }
            out.positions[i] = xn;
            out.velocities[i] = vn;
        }
    });
    out.time = state.time + dt;
    out.step = state.step + 1;
    check_state(state, out, controls);
    return out;
}

ParticleEnsemble step_langevin(const ParticleEnsemble& state, const ModelSpec& spec, double dt) {
    const auto* lin = std::get_if<FrictionLinear>(&spec.friction);
    if (!lin) throw ConfigError("langevin requires linear friction");
    const double m = spec.particle_mass;
    SdeCoefficients k;
    k.position_rate = 1.0;
    k.friction_scale = 1.0 / m;
    k.friction = *lin;
    k.alignment_scale = 1.0 / m;
    k.force_scale = 1.0 / m;
    k.noise = std::sqrt(2.0 * spec.diffusion) / m;
    return euler_maruyama_step(state, spec.kernel, k, spec.potential, substream(spec.seed, "noise"),
                               spec.controls, dt);
}

SdeCoefficients scaled_coefficients(const ScalingSpec& s) {
    const double eps = s.epsilon;
    SdeCoefficients k;
    switch (s.kind) {
        case ScalingKind::frictionless:
            k.position_rate = 1.0;
            k.friction_scale = 0.0;
            k.friction = FrictionNone{};
            k.alignment_scale = 1.0 / eps;
            k.force_scale = 1.0;
            k.noise = std::sqrt(2.0);
            break;
        case ScalingKind::hyperbolic:
        case ScalingKind::intermediate:
        case ScalingKind::generalized_friction: {
            const double g = s.effective_gamma();
            const double fast = std::pow(eps, -(1.0 + g));
            k.position_rate = std::pow(eps, -g);
            k.friction_scale = fast;
            if (s.kind == ScalingKind::generalized_friction)
                k.friction = FrictionGeneralized{s.alpha_law(eps), 1.0, s.k_law(eps)};
            else
                k.friction = FrictionLinear{1.0};
            k.alignment_scale = fast;
            k.force_scale = 1.0 / eps;
            k.noise = std::sqrt(2.0 * std::pow(eps, g - 1.0));
            break;
        }
    }
    return k;
}

ParticleEnsemble step_scaled(const ParticleEnsemble& state, const ScalingSpec& scaling, const ModelSpec& spec,
                             double dt, std::vector<Vec>* alignment_out) {
    scaling.validate();
    require_dt(dt);
    const double limit = spec.controls.stiffness_fraction * std::pow(scaling.epsilon, 1.0 + scaling.effective_gamma());
    if (dt > limit)
        throw StiffnessError("dt = " + std::to_string(dt) + " exceeds the stiffness limit " + std::to_string(limit) +
                             " at eps = " + std::to_string(scaling.epsilon));
    const KernelParams kp{scaling.lambda, scaling.epsilon, state.dim};
    return euler_maruyama_step(state, kp, scaled_coefficients(scaling), spec.potential,
                               substream(spec.seed, "noise"), spec.controls, dt, alignment_out);
}

ParticleEnsemble step_model(const ParticleEnsemble& state, const ModelSpec& spec, const ScalingSpec& scaling,
                            double dt) {
    switch (spec.model) {
        case ModelKind::cucker_smale: return step_cucker_smale(state, spec, dt);
        case ModelKind::motsch_tadmor: return step_motsch_tadmor(state, spec, dt);
        case ModelKind::langevin: return step_langevin(state, spec, dt);
        case ModelKind::scaled: return step_scaled(state, scaling, spec, dt);
    }
    throw ConfigError("unknown model");
}

FlockingDiagnostics flocking_diagnostics(const ParticleEnsemble& state) {
    state.validate();
    const std::size_t n = state.size();
    FlockingDiagnostics d;
    std::vector<double> xrow(n, 0.0), vrow(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double xm = 0.0, vm = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                xm = std::max(xm, norm_sq(state.positions[i] - state.positions[j]));
                vm = std::max(vm, norm_sq(state.velocities[i] - state.velocities[j]));
            }
            xrow[i] = xm;
            vrow[i] = vm;
        }
    });
    double xm = 0.0, vm = 0.0;
    Vec mom{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        xm = std::max(xm, xrow[i]);
        vm = std::max(vm, vrow[i]);
        mom = mom + state.velocities[i];
    }
    d.position_diameter = std::sqrt(xm);
    d.velocity_diameter = std::sqrt(vm);
    d.mean_velocity = (1.0 / static_cast<double>(n)) * mom;
    if (vm == 0.0) {
        d.mean_velocity = state.velocities[0];
        return d;
    }
    double lam = 0.0;
    for (std::size_t i = 0; i < n; ++i) lam += state.weight * norm_sq(state.velocities[i] - d.mean_velocity);
    d.kinetic_fluctuation = lam;
    return d;
}

}  // namespace cslab
