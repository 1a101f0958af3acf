#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cslab/errors.hpp"
#include "cslab/particles.hpp"
#include "cslab/rng.hpp"

using namespace cslab;

namespace {

ParticleEnsemble ensemble(int dim, std::vector<Vec> x, std::vector<Vec> v, double weight) {
    ParticleEnsemble s;
    s.dim = dim;
    s.positions = std::move(x);
    s.velocities = std::move(v);
    s.weight = weight;
    return s;
}

ModelSpec cucker_smale(double lambda) {
    ModelSpec m;
    m.model = ModelKind::cucker_smale;
    m.kernel = KernelClassical{lambda};
    return m;
}

/// RK4 of the relative coordinates of two particles: x' = v, v' = -2 w phi(|x|) v.
std::pair<double, double> two_body_reference(double x, double v, double w, double lambda, double T, double dt) {
    auto f = [&](double xx, double vv) {
        return std::pair{vv, -2.0 * w * std::pow(1.0 + xx * xx, -lambda) * vv};
    };
    const auto steps = static_cast<long>(std::lround(T / dt));
    for (long s = 0; s < steps; ++s) {
        const auto [a1, b1] = f(x, v);
        const auto [a2, b2] = f(x + 0.5 * dt * a1, v + 0.5 * dt * b1);
        const auto [a3, b3] = f(x + 0.5 * dt * a2, v + 0.5 * dt * b2);
        const auto [a4, b4] = f(x + dt * a3, v + dt * b3);
        x += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
        v += dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
    }
    return {x, v};
}

}  // namespace

TEST(Particles, UniformSamplerRespectsBoxAndMass) {
    const auto s = sample_uniform_ensemble(500, 2, 3.0, 1.5, 0.5, substream(1, "initial"));
    EXPECT_EQ(s.size(), 500u);
    EXPECT_DOUBLE_EQ(s.total_mass(), 3.0);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (int c = 0; c < 2; ++c) {
            EXPECT_LE(std::abs(s.positions[i][c]), 1.5);
            EXPECT_LE(std::abs(s.velocities[i][c]), 0.5);
        }
}

TEST(Particles, ValidateRejectsBadStates) {
    EXPECT_THROW(ensemble(1, {}, {}, 1.0).validate(), DomainError);
    EXPECT_THROW(ensemble(1, {{0, 0, 0}}, {{0, 0, 0}}, 0.0).validate(), DomainError);
    EXPECT_THROW(ensemble(1, {{NAN, 0, 0}}, {{0, 0, 0}}, 1.0).validate(), DomainError);
}

TEST(CuckerSmale, EqualVelocitiesTranslateRigidly) {
    auto s = sample_uniform_ensemble(20, 2, 1.0, 1.0, 0.0, 3);
    for (auto& v : s.velocities) v = {0.3, -0.2, 0.0};
    const auto spec = cucker_smale(0.25);
    for (int k = 0; k < 100; ++k) s = step_cucker_smale(s, spec, 0.01);
    EXPECT_EQ(flocking_diagnostics(s).velocity_diameter, 0.0);
}

TEST(CuckerSmale, TwoBodyMatchesFineReference) {
    const double w = 0.5, lambda = 0.25, T = 50.0;
    auto s = ensemble(1, {{-0.5, 0, 0}, {0.5, 0, 0}}, {{1.0, 0, 0}, {-1.0, 0, 0}}, w);
    const auto spec = cucker_smale(lambda);
    double prev_gap = 2.0, max_pos_gap = 0.0;
    for (int k = 0; k < 5000; ++k) {
        s = step_cucker_smale(s, spec, 0.01);
        const double gap = std::abs(s.velocities[0][0] - s.velocities[1][0]);
        EXPECT_LE(gap, prev_gap);
        prev_gap = gap;
        max_pos_gap = std::max(max_pos_gap, std::abs(s.positions[0][0] - s.positions[1][0]));
    }
    const auto [xr, vr] = two_body_reference(-1.0, 2.0, w, lambda, T, 1e-4);
    EXPECT_NEAR(s.positions[0][0] - s.positions[1][0], xr, 1e-6);
    EXPECT_NEAR(s.velocities[0][0] - s.velocities[1][0], vr, 1e-8);
    EXPECT_LT(max_pos_gap, 1.0 + 2.0 * T);
}

TEST(CuckerSmale, MeanVelocityConserved) {
    auto s = sample_uniform_ensemble(32, 2, 1.0, 1.0, 1.0, 11);
    const Vec m0 = flocking_diagnostics(s).mean_velocity;
    const auto spec = cucker_smale(0.25);
    for (int k = 0; k < 10000; ++k) s = step_cucker_smale(s, spec, 0.01);
    const Vec m1 = flocking_diagnostics(s).mean_velocity;
    EXPECT_LE(norm(m1 - m0), 1e-10 * std::max(norm(m0), 1e-300));
}

TEST(MotschTadmor, EqualVelocitiesTranslateRigidly) {
    auto s = sample_uniform_ensemble(10, 1, 1.0, 1.0, 0.0, 4);
    for (auto& v : s.velocities) v = {1.0, 0, 0};
    ModelSpec spec = cucker_smale(0.25);
    spec.model = ModelKind::motsch_tadmor;
    for (int k = 0; k < 200; ++k) s = step_motsch_tadmor(s, spec, 0.01);
    EXPECT_EQ(flocking_diagnostics(s).velocity_diameter, 0.0);
}

TEST(MotschTadmor, SingleParticleHasNoAcceleration) {
    auto s = ensemble(2, {{0.2, 0.1, 0}}, {{1.0, -1.0, 0}}, 1.0);
    ModelSpec spec = cucker_smale(0.25);
    spec.model = ModelKind::motsch_tadmor;
    const auto out = step_motsch_tadmor(s, spec, 0.1);
    EXPECT_EQ(out.velocities[0][0], 1.0);
    EXPECT_EQ(out.velocities[0][1], -1.0);
}

TEST(MotschTadmor, LightClusterAcceleratesMoreThanUnderCuckerSmale) {
    std::vector<Vec> x, v;
    for (int i = 0; i < 2; ++i) x.push_back({0, 0, 0}), v.push_back({1, 0, 0});
    for (int i = 0; i < 50; ++i) x.push_back({5, 0, 0}), v.push_back({0, 0, 0});
    const auto s = ensemble(1, x, v, 1.0 / 52.0);
    ModelSpec cs = cucker_smale(0.25);
    ModelSpec mt = cs;
    mt.model = ModelKind::motsch_tadmor;
    const double dt = 1e-4;
    const double a_cs = std::abs(step_cucker_smale(s, cs, dt).velocities[0][0] - 1.0) / dt;
    const double a_mt = std::abs(step_motsch_tadmor(s, mt, dt).velocities[0][0] - 1.0) / dt;
    EXPECT_GT(a_mt, a_cs);
}

TEST(Langevin, DeterministicLimitMatchesCuckerSmaleToSecondOrder) {
    auto s = sample_uniform_ensemble(16, 2, 1.0, 1.0, 1.0, 5);
    ModelSpec lv = cucker_smale(0.25);
    lv.model = ModelKind::langevin;
    lv.friction = FrictionLinear{0.0};
    const double dt = 1e-3;
    const auto a = step_langevin(s, lv, dt);
    const auto b = step_cucker_smale(s, cucker_smale(0.25), dt);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_LT(norm(a.velocities[i] - b.velocities[i]), 10 * dt * dt);
}

TEST(Langevin, LinearDecayWithoutInteractions) {
    auto s = ensemble(1, {{0, 0, 0}, {1, 0, 0}}, {{2.0, 0, 0}, {-1.0, 0, 0}}, 0.5);
    ModelSpec lv;
    lv.model = ModelKind::langevin;
    lv.kernel = KernelNone{};
    lv.friction = FrictionLinear{0.7};
    const double dt = 1e-4;
    for (int k = 0; k < 10000; ++k) s = step_langevin(s, lv, dt);
    // Euler's factor (1 - mu dt)^n converges to exp(-mu t) at first order.
    EXPECT_NEAR(s.velocities[0][0], 2.0 * std::exp(-0.7), 2.0 * 0.7 * 0.7 * dt);
    EXPECT_NEAR(s.velocities[1][0], -std::exp(-0.7), 0.7 * 0.7 * dt);
}

TEST(Langevin, StationaryVarianceIsDiffusionOverFriction) {
    const std::size_t n = 10000;
    auto s = sample_uniform_ensemble(n, 1, 1.0, 1.0, 0.0, 6);
    ModelSpec lv;
    lv.model = ModelKind::langevin;
    lv.kernel = KernelNone{};
    lv.friction = FrictionLinear{2.0};
    lv.diffusion = 0.5;
    lv.seed = 9;
    lv.controls.max_velocity_growth = 1e6;
    const double dt = 1e-3;
    for (int k = 0; k < 5000; ++k) s = step_langevin(s, lv, dt);
    double var = 0.0;
    for (const auto& v : s.velocities) var += v[0] * v[0];
    var /= static_cast<double>(n);
    // Euler–Maruyama's stationary variance of the OU process is D / (mu (1 - mu dt / 2)).
    const double target = 0.5 / 2.0 / (1.0 - 2.0 * dt / 2.0);
    const double sigma = target * std::sqrt(2.0 / static_cast<double>(n));
    EXPECT_NEAR(var, target, 3.0 * sigma);
}

TEST(Scaled, UnitEpsilonHyperbolicMatchesLangevin) {
    const auto s = sample_uniform_ensemble(40, 1, 1.0, 1.0, 1.0, 7);
    ScalingSpec sc;
    sc.kind = ScalingKind::hyperbolic;
    sc.epsilon = 1.0;
    sc.lambda = 0.25;
    ModelSpec spec;
    spec.model = ModelKind::scaled;
    spec.seed = 13;
    spec.potential = PotentialZero{};
    ModelSpec lv = spec;
    lv.model = ModelKind::langevin;
    lv.kernel = KernelParams{0.25, 1.0, 1};
    lv.friction = FrictionLinear{1.0};
    lv.diffusion = 1.0;
    const auto a = step_scaled(s, sc, spec, 0.01);
    const auto b = step_langevin(s, lv, 0.01);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(a.velocities[i][0], b.velocities[i][0]);
        EXPECT_EQ(a.positions[i][0], b.positions[i][0]);
    }
}

TEST(Scaled, GeneralizedFrictionWithZeroLawsIsIntermediate) {
    const auto s = sample_uniform_ensemble(30, 2, 1.0, 1.0, 1.0, 8);
    ScalingSpec inter;
    inter.kind = ScalingKind::intermediate;
    inter.gamma = 0.5;
    inter.epsilon = 0.3;
    ScalingSpec gen = inter;
    gen.kind = ScalingKind::generalized_friction;
    gen.k_law = {0.0, 1.0};
    gen.alpha_law = {0.0, 1.0};
    ModelSpec spec;
    spec.model = ModelKind::scaled;
    spec.potential = PotentialQuadratic{1.0};
    const double dt = 1e-3;
    const auto a = step_scaled(s, inter, spec, dt);
    const auto b = step_scaled(s, gen, spec, dt);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(a.velocities[i][c], b.velocities[i][c]);
}

TEST(Scaled, FrictionlessSingleParticleVarianceGrowsLinearly) {
    const int runs = 2000, steps = 100;
    const double dt = 0.01;
    ScalingSpec sc;
    sc.kind = ScalingKind::frictionless;
    sc.epsilon = 1.0;
    double var = 0.0;
    for (int r = 0; r < runs; ++r) {
        auto s = ensemble(2, {{0, 0, 0}}, {{0, 0, 0}}, 1.0);
        ModelSpec spec;
        spec.model = ModelKind::scaled;
        spec.seed = static_cast<std::uint64_t>(r);
        spec.controls.max_velocity_growth = 1e9;
        for (int k = 0; k < steps; ++k) s = step_scaled(s, sc, spec, dt);
        var += s.velocities[0][0] * s.velocities[0][0];
    }
    var /= runs;
    const double target = 2.0 * dt * steps;
    EXPECT_NEAR(var, target, 3.0 * target * std::sqrt(2.0 / runs));
}

TEST(Scaled, StiffStepRejected) {
    const auto s = sample_uniform_ensemble(4, 1, 1.0, 1.0, 1.0, 9);
    ScalingSpec sc;
    sc.epsilon = 0.1;
    ModelSpec spec;
    spec.model = ModelKind::scaled;
    EXPECT_THROW(step_scaled(s, sc, spec, 0.01), StiffnessError);
}

TEST(Diagnostics, SingleParticle) {
    const auto d = flocking_diagnostics(ensemble(2, {{1, 2, 0}}, {{3, 4, 0}}, 1.0));
    EXPECT_EQ(d.position_diameter, 0.0);
    EXPECT_EQ(d.velocity_diameter, 0.0);
    EXPECT_EQ(d.kinetic_fluctuation, 0.0);
}

TEST(Diagnostics, TwoParticleArithmetic) {
    const auto d = flocking_diagnostics(ensemble(2, {{0, 0, 0}, {3, 0, 0}}, {{1, 0, 0}, {-1, 0, 0}}, 0.5));
    EXPECT_DOUBLE_EQ(d.position_diameter, 3.0);
    EXPECT_DOUBLE_EQ(d.velocity_diameter, 2.0);
    EXPECT_DOUBLE_EQ(d.mean_velocity[0], 0.0);
    EXPECT_DOUBLE_EQ(d.kinetic_fluctuation, 1.0);
}

TEST(Diagnostics, FluctuationIdentity) {
    const auto s = sample_uniform_ensemble(100, 3, 2.0, 1.0, 1.5, 10);
    const auto d = flocking_diagnostics(s);
    double total = 0.0;
    for (const auto& v : s.velocities) total += s.weight * norm_sq(v);
    const double rhs = total - s.total_mass() * norm_sq(d.mean_velocity);
    EXPECT_NEAR(d.kinetic_fluctuation, rhs, 1e-12 * total);
}
