#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cslab/errors.hpp"
#include "cslab/moments.hpp"
#include "cslab/rng.hpp"
#include "cslab/scalings.hpp"

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

double naive_dissipation(const ParticleEnsemble& s, const KernelParams& p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (i == j) continue;
            const double r = norm(s.positions[i] - s.positions[j]);
            sum += s.weight * s.weight * std::pow(p.epsilon * p.epsilon + p.c() * r * r, -p.lambda) *
                   norm_sq(s.velocities[i] - s.velocities[j]);
        }
    return sum;
}

}  // namespace

TEST(Moments, SingleParticleIntegrals) {
    const auto grid = make_cube_grid(2, 2.0, 41);
    const auto m = empirical_moments(ensemble(2, {{0.013, -0.021, 0}}, {{1, 0, 0}}, 1.0), grid, 1.0);
    EXPECT_NEAR(integrate(grid, m.rho), 1.0, 1e-12);
    EXPECT_NEAR(integrate(grid, m.current, 0), 1.0, 1e-12);
    EXPECT_NEAR(integrate(grid, m.current, 1), 0.0, 1e-12);
    EXPECT_NEAR(integrate(grid, m.energy), 0.5, 1e-12);
}

TEST(Moments, EnergyIdentitiesPointwise) {
    const auto s = sample_uniform_ensemble(400, 2, 1.0, 1.0, 1.0, 21);
    const auto grid = make_cube_grid(2, 1.5, 25);
    const auto m = empirical_moments(s, grid, 1.0);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double s00 = m.stress(a, sym_index(0, 0, 2)), s11 = m.stress(a, sym_index(1, 1, 2));
        const double s01 = m.stress(a, sym_index(0, 1, 2));
        EXPECT_NEAR(m.energy(a), 0.5 * (s00 + s11), 1e-14);
        EXPECT_GE(m.energy_internal(a), 0.0);
        EXPECT_NEAR(m.energy(a), m.energy_kinetic(a) + m.energy_internal(a), 1e-14);
        const double tr = s00 + s11, det = s00 * s11 - s01 * s01;
        const double top = 0.5 * (tr + std::sqrt(std::max(tr * tr - 4 * det, 0.0)));
        EXPECT_LE(top, 2.0 * m.energy(a) + 1e-14);
        EXPECT_GE(m.rho(a), 0.0);
    }
}

TEST(Moments, EqualVelocitiesHaveNoInternalEnergy) {
    auto s = sample_uniform_ensemble(200, 1, 1.0, 1.0, 0.0, 22);
    for (auto& v : s.velocities) v = {0.7, 0, 0};
    const auto grid = make_cube_grid(1, 2.0, 81);
    const auto m = empirical_moments(s, grid, 1.0);
    EXPECT_NEAR(integrate(grid, m.energy_internal), 0.0, 1e-12);
}

TEST(Moments, GaussianVelocitiesEnergy) {
    const std::size_t n = 10000;
    auto s = sample_uniform_ensemble(n, 2, 1.0, 1.0, 0.0, 23);
    StreamRng rng(substream(23, "velocity"));
    for (auto& v : s.velocities) v = {rng.normal(), rng.normal(), 0.0};
    const auto grid = make_cube_grid(2, 2.0, 41);
    const auto m = empirical_moments(s, grid, 1.0);
    // |v|^2 / 2 has variance N / 4 per particle for standard normal velocities.
    const double sigma = std::sqrt(2.0 / 4.0 / static_cast<double>(n));
    EXPECT_NEAR(integrate(grid, m.energy), 1.0, 3.0 * sigma);
}

TEST(Dissipation, EqualVelocitiesGiveZero) {
    auto s = sample_uniform_ensemble(50, 2, 1.0, 1.0, 0.0, 24);
    EXPECT_EQ(dissipation_rate(s, {0.25, 0.1, 2}), 0.0);
}

TEST(Dissipation, TwoParticleValue) {
    const auto s = ensemble(1, {{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {-1, 0, 0}}, 0.5);
    EXPECT_NEAR(dissipation_rate(s, {0.3, 1.0, 1}), 1.0, 1e-15);
}

TEST(Dissipation, MatchesNaiveDoubleLoop) {
    const auto s = sample_uniform_ensemble(500, 2, 1.0, 1.0, 1.0, 25);
    const KernelParams p{0.3, 0.05, 2};
    const double fast = dissipation_rate(s, p), slow = naive_dissipation(s, p);
    EXPECT_NEAR(fast, slow, 1e-12 * slow);
}

TEST(Convolved, ZeroDensityGivesZero) {
    const auto grid = make_cube_grid(1, 2.0, 41);
    MomentFields m;
    m.grid = grid;
    m.rho = Field(grid.size(), 1);
    m.current = Field(grid.size(), 1);
    const auto c = convolved_fields(m, {0.25, 0.5, 1});
    for (double v : c.phi_conv_rho.data) EXPECT_EQ(v, 0.0);
    for (double v : c.phi_conv_j.data) EXPECT_EQ(v, 0.0);
}

TEST(Convolved, PointMassGivesKernel) {
    const auto grid = make_cube_grid(1, 4.0, 81);
    MomentFields m;
    m.grid = grid;
    m.rho = Field(grid.size(), 1);
    m.current = Field(grid.size(), 1);
    m.rho(grid.size() / 2) = 1.0 / grid.cell_volume();
    const KernelParams p{0.25, 0.5, 1};
    const auto c = convolved_fields(m, p);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double r = std::abs(grid.coordinate(a)[0]);
        if (r < 0.5) continue;
        EXPECT_NEAR(c.phi_conv_rho(a), influence_scaled(r, p), 1e-12);
    }
}

TEST(Convolved, GaussianMatchesFineQuadrature) {
    const auto grid = make_cube_grid(1, 6.0, 241);
    MomentFields m;
    m.grid = grid;
    m.rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    m.current = Field(grid.size(), 1);
    const KernelParams p{0.25, 0.5, 1};
    const auto c = convolved_fields(m, p);
    for (std::size_t a : {std::size_t{120}, std::size_t{100}, std::size_t{150}}) {
        const double x = grid.coordinate(a)[0];
        const std::size_t n = 1'000'000;
        const double lo = -12.0, h = 24.0 / static_cast<double>(n);
        double ref = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            const double y = lo + h * static_cast<double>(i);
            ref += ((i == 0 || i == n) ? 0.5 : 1.0) * influence_scaled(std::abs(x - y), p) * std::exp(-y * y);
        }
        ref *= h;
        EXPECT_NEAR(c.phi_conv_rho(a), ref, 1e-3 * ref);
    }
}

TEST(Commutator, UniformVelocityGivesZero) {
    auto s = sample_uniform_ensemble(300, 2, 1.0, 1.0, 0.0, 26);
    for (auto& v : s.velocities) v = {0.4, -1.1, 0.0};
    const auto grid = make_cube_grid(2, 2.0, 33);
    const auto m = empirical_moments(s, grid, 1.0);
    const auto c = commutator_field(m, {0.25, 0.2, 2});
    double scale = 0.0;
    const auto conv = convolved_fields(m, {0.25, 0.2, 2});
    for (std::size_t a = 0; a < grid.size(); ++a) scale = std::max(scale, conv.phi_conv_rho(a) * m.rho(a));
    for (double v : c.data) EXPECT_LE(std::abs(v), 1e-12 * scale);
}

TEST(Commutator, PointMassPairIsAntisymmetric) {
    const auto grid = make_cube_grid(1, 4.0, 81);
    MomentFields m;
    m.grid = grid;
    m.rho = Field(grid.size(), 1);
    m.current = Field(grid.size(), 1);
    const std::size_t a = 30, b = 50;
    m.rho(a) = m.rho(b) = 1.0 / grid.cell_volume();
    m.current(b) = 2.0 / grid.cell_volume();
    const auto c = commutator_field(m, {0.25, 0.3, 1});
    EXPECT_GT(std::abs(c(a)), 0.0);
    EXPECT_NEAR(c(a), -c(b), 1e-12 * std::abs(c(a)));
}

TEST(Commutator, MatchesNaiveDoubleSum) {
    const auto grid = make_cube_grid(1, 2.0, 41);
    MomentFields m;
    m.grid = grid;
    m.rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]) + 0.1 * std::cos(3 * x[0]) + 0.1; });
    m.current = sample_scalar(grid, [](const Vec& x) { return std::sin(2 * x[0]) - 0.3 * x[0]; });
    const KernelParams p{0.25, 0.3, 1};
    const auto c = commutator_field(m, p);
    const ConvolutionWeights w(grid, PowerKernel::scaled(p));
    for (std::size_t x = 0; x < grid.size(); ++x) {
        double ref = 0.0, scale = 0.0;
        for (std::size_t y = 0; y < grid.size(); ++y) {
            const double wt = w.weight({x, 0, 0}, {y, 0, 0});
            ref += wt * (m.current(y) * m.rho(x) - m.rho(y) * m.current(x));
            scale += wt * (std::abs(m.current(y) * m.rho(x)) + std::abs(m.rho(y) * m.current(x)));
        }
        EXPECT_NEAR(c(x), ref, 1e-12 * scale);
    }
}

TEST(WeakForm, ConstantTestAndEqualVelocitiesGiveZero) {
    const VectorTestFunction one{"one", [](double, const Vec&) { return Vec{1, 1, 0}; }, 0.0};
    const VectorTestFunction g{"sin", [](double, const Vec& x) { return Vec{std::sin(x[0]), std::cos(x[1]), 0}; }, 1.0};
    auto s = sample_uniform_ensemble(100, 2, 1.0, 1.0, 1.0, 27);
    const KernelParams p{0.25, 0.1, 2};
    EXPECT_EQ(weak_commutator_form(s, one, p), 0.0);
    for (auto& v : s.velocities) v = {0.2, 0.2, 0};
    EXPECT_EQ(weak_commutator_form(s, g, p), 0.0);
}

TEST(WeakForm, SymmetrizedAgreesWithUnsymmetrized) {
    const auto tests = default_test_dictionary(2);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto s = sample_uniform_ensemble(300, 2, 1.0, 1.0, 1.0, seed);
        const KernelParams p{0.25, 0.05, 2};
        for (const auto& g : tests) {
            const double a = weak_commutator_form(s, g, p), b = weak_commutator_form_unsymmetrized(s, g, p);
            EXPECT_NEAR(a, b, 1e-12 * std::max(std::abs(a), 1e-300) + 1e-15) << g.name;
        }
    }
}

TEST(NearDiagonal, SmallRadiusAndEqualVelocitiesGiveZero) {
    auto s = ensemble(1, {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}, {{1, 0, 0}, {0, 0, 0}, {2, 0, 0}}, 1.0);
    const KernelParams p{0.25, 0.1, 1};
    EXPECT_EQ(near_diagonal_mass(s, 0.5, p), 0.0);
    for (auto& v : s.velocities) v = {1, 0, 0};
    EXPECT_EQ(near_diagonal_mass(s, 10.0, p), 0.0);
}

TEST(NearDiagonal, BelowMajorant) {
    const auto s = sample_uniform_ensemble(300, 1, 1.0, 1.0, 1.0, 28);
    const KernelParams p{0.25, 0.05, 1};
    for (double r : {0.01, 0.1, 0.5}) {
        const auto nd = near_diagonal(s, r, p);
        EXPECT_LE(nd.mass, nd.majorant * (1 + 1e-12));
        EXPECT_EQ(nd.mass, near_diagonal_mass(s, r, p));
    }
}

TEST(Balance, StaticEnsembleHasZeroResiduals) {
    auto s = sample_uniform_ensemble(100, 1, 1.0, 1.0, 0.0, 29);
    const auto grid = make_cube_grid(1, 2.0, 41);
    std::vector<MomentFields> series;
    for (int k = 0; k < 4; ++k) {
        auto m = empirical_moments(s, grid, 1.0);
        m.time = 0.1 * k;
        series.push_back(m);
    }
    ScalingSpec sc;
    const auto r = balance_residuals(series, sc, PotentialZero{});
    EXPECT_EQ(r.mass.sup, 0.0);
    EXPECT_EQ(r.current.sup, 0.0);
}

TEST(Balance, TooFewLevelsThrow) {
    const auto grid = make_cube_grid(1, 2.0, 41);
    const auto m = empirical_moments(sample_uniform_ensemble(10, 1, 1.0, 1.0, 0.0, 30), grid, 1.0);
    EXPECT_THROW(balance_residuals({m, m}, ScalingSpec{}, PotentialZero{}), InsufficientSeriesError);
}

TEST(GlobalMoments, MassAndSingleParticle) {
    const auto s = sample_uniform_ensemble(50, 2, 2.5, 1.0, 1.0, 31);
    const auto zero = global_moment_series({s, s}, 0);
    for (const auto& g : zero) EXPECT_DOUBLE_EQ(g.velocity, 2.5);
    const auto one = global_moment_series({ensemble(2, {{0, 0, 0}}, {{2, 0, 0}}, 1.0)}, 3);
    EXPECT_DOUBLE_EQ(one[0].velocity, 8.0);
}

TEST(Trapezoid, LinearIsExact) { EXPECT_DOUBLE_EQ(trapezoid({0, 1, 3}, {0, 2, 6}), 9.0); }
