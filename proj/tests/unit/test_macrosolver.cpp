#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <limits>
#include <random>

#include "cslab/errors.hpp"
#include "cslab/macrosolver.hpp"

using namespace cslab;

namespace {

VelocityField linear_flow(const GridSpec& grid, double dt, std::size_t levels) {
    return sample_velocity(grid, dt, levels, [](double, const Vec& x) { return x; });
}

}  // namespace

TEST(Backtrace, ConstantFlow) {
    const auto grid = make_cube_grid(2, 4.0, 33);
    const auto u = sample_velocity(grid, 0.05, 21, [](double, const Vec&) { return Vec{0.5, -0.25, 0}; });
    const auto b = flow_backtrace(u, 1.0, {0.3, 0.2, 0});
    EXPECT_NEAR(b.x0[0], 0.3 - 0.5, 1e-12);
    EXPECT_NEAR(b.x0[1], 0.2 + 0.25, 1e-12);
    EXPECT_NEAR(b.log_jacobian, 0.0, 1e-12);
}

TEST(Backtrace, LinearFlow) {
    const auto grid = make_cube_grid(1, 8.0, 2049);
    const auto u = linear_flow(grid, 0.01, 101);
    for (double x : {-2.0, 0.5, 3.0}) {
        const auto b = flow_backtrace(u, 1.0, {x, 0, 0});
        EXPECT_NEAR(b.x0[0], x * std::exp(-1.0), 1e-8);
        EXPECT_NEAR(b.log_jacobian, -1.0, 1e-8);
    }
}

TEST(Backtrace, SineFlowJacobianMatchesFiniteDifference) {
    const auto grid = make_cube_grid(1, 8.0, 4097);
    const auto u = sample_velocity(grid, 0.01, 51, [](double, const Vec& x) { return Vec{std::sin(x[0]), 0, 0}; });
    const double h = 1e-5;
    for (double x : {-1.0, 0.2, 2.5}) {
        const auto b = flow_backtrace(u, 0.5, {x, 0, 0});
        const double fd = (flow_backtrace(u, 0.5, {x + h, 0, 0}).x0[0] - flow_backtrace(u, 0.5, {x - h, 0, 0}).x0[0]) /
                          (2 * h);
        EXPECT_NEAR(std::exp(b.log_jacobian), fd, 1e-3 * std::abs(fd));
    }
}

TEST(Backtrace, ExitingCharacteristicThrows) {
    const auto grid = make_cube_grid(1, 1.0, 65);
    const auto u = sample_velocity(grid, 0.01, 101, [](double, const Vec&) { return Vec{2.0, 0, 0}; });
    EXPECT_THROW(flow_backtrace(u, 1.0, {0.5, 0, 0}), DomainExitError);
}

TEST(Pushforward, ZeroVelocityIsIdentity) {
    const auto grid = make_cube_grid(1, 4.0, 129);
    const auto rho0 = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    const auto u = sample_velocity(grid, 0.05, 11, [](double, const Vec&) { return Vec{}; });
    const auto rho = transport_pushforward(rho0, u);
    for (const auto& level : rho.values)
        for (std::size_t a = 0; a < grid.size(); ++a) EXPECT_NEAR(level(a), rho0(a), 1e-14);
}

TEST(Pushforward, ConstantVelocityTranslates) {
    const auto grid = make_cube_grid(1, 6.0, 1201);
    auto g = [](double x) { return std::exp(-2.0 * x * x); };
    const auto rho0 = sample_scalar(grid, [&](const Vec& x) { return g(x[0]); });
    const auto u = sample_velocity(grid, 0.05, 21, [](double, const Vec&) { return Vec{1.0, 0, 0}; });
    const auto rho = transport_pushforward(rho0, u, {}, ExitPolicy::zero_density);
    const auto& last = rho.values.back();
    for (std::size_t a = 0; a < grid.size(); a += 7) {
        const double x = grid.coordinate(a)[0];
        if (x - 1.0 < -6.0) continue;
        EXPECT_NEAR(last(a), g(x - 1.0), 1e-4);
    }
}

TEST(Pushforward, LinearFlowClosedFormAndMass) {
    const auto grid = make_cube_grid(1, 8.0, 2048);
    auto g = [](double x) { return std::exp(-2.0 * x * x); };
    const auto rho0 = sample_scalar(grid, [&](const Vec& x) { return g(x[0]); });
    const auto u = linear_flow(grid, 1e-2, 101);
    const auto rho = transport_pushforward(rho0, u);
    const auto& last = rho.values.back();
    double err = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double x = grid.coordinate(a)[0];
        err = std::max(err, std::abs(last(a) - g(x * std::exp(-1.0)) * std::exp(-1.0)));
    }
    EXPECT_LT(err, 1e-3);
    EXPECT_NEAR(rho.mass(rho.values.size() - 1), rho.mass(0), 1e-6);
}

TEST(Commutator, ConstantVelocityAndShift) {
    const auto grid = make_cube_grid(1, 4.0, 129);
    const auto rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    const Field c(grid.size(), 1, 2.5);
    for (double v : commutator_apply(rho, c, 0.25, grid).data) EXPECT_LE(std::abs(v), 1e-12);
    const auto u = sample_vector(grid, 1, [](const Vec& x) { return Vec{std::sin(x[0]), 0, 0}; });
    Field shifted = u;
    for (double& v : shifted.data) v += 3.7;
    const auto a = commutator_apply(rho, u, 0.25, grid), b = commutator_apply(rho, shifted, 0.25, grid);
    double scale = 0.0;
    for (double v : a.data) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-12 * scale);
}

TEST(Commutator, PointMassClosedForm) {
    const double lambda = 0.25;
    const auto grid = make_cube_grid(1, 4.0, 161);
    Field rho(grid.size(), 1);
    rho(grid.size() / 2) = 1.0 / grid.cell_volume();
    const auto u = sample_vector(grid, 1, [](const Vec& x) { return x; });
    const auto out = commutator_apply(rho, u, lambda, grid);
    const double c = c_lambda(lambda);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double x = grid.coordinate(a)[0];
        if (std::abs(x) < 0.5) continue;
        const double expected = -std::pow(c, -lambda) * x * std::pow(std::abs(x), -2 * lambda);
        EXPECT_NEAR(out(a), expected, 1e-12 * std::abs(expected)) << x;
    }
}

TEST(Norms, ZeroHomogeneityAndGaussian) {
    const auto grid = make_cube_grid(1, 10.0, 10001);
    const Field zero(grid.size(), 1);
    EXPECT_EQ(norm_wkpq(zero, 1, 2.0, 8.0, grid), 0.0);
    auto f = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    Field f2 = f;
    for (double& v : f2.data) v *= 2.0;
    const double n1 = norm_wkpq(f, 1, 2.0, 8.0, grid);
    EXPECT_NEAR(norm_wkpq(f2, 1, 2.0, 8.0, grid), 2.0 * n1, 1e-12 * n1);
    EXPECT_NEAR(lp_norm(grid, f, 2.0), std::pow(std::numbers::pi / 2.0, 0.25), 1e-4);
    EXPECT_THROW(norm_wkpq(f, 0, 2.0, 8.0, grid), DomainError);
}

TEST(Smallness, ExponentIdentities) {
    for (double p1 : {1.0, 1.2, 2.0})
        for (double p2 : {4.0, 8.0, std::numeric_limits<double>::infinity()}) {
            const auto [a, b] = interpolation_exponents(0.25, p1, p2, 1);
            EXPECT_NEAR(a + b, 1.0, 1e-14);
        }
    const auto [lo, hi] = interpolation_exponents(0.25, 1.0, INFINITY, 1);
    EXPECT_DOUBLE_EQ(lo, 0.5);
    EXPECT_DOUBLE_EQ(hi, 0.5);
    const auto [lo2, hi2] = interpolation_exponents(0.5, 1.0, INFINITY, 2);
    EXPECT_DOUBLE_EQ(lo2, 0.5);
    EXPECT_DOUBLE_EQ(hi2, 0.5);
}

TEST(Smallness, ZeroDensityHasZeroNorm) {
    SolverConfig cfg;
    const Field rho0(cfg.grid.size(), 1);
    const auto rep = check_smallness(rho0, PotentialQuadratic{0.05}, cfg);
    EXPECT_EQ(rep.rho0_norm, 0.0);
}

TEST(SolverConfigTest, Validation) {
    SolverConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    SolverConfig bad = cfg;
    bad.lambda = 0.5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.horizon = 1.01;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.mu = 0.0;
    const Field rho0(cfg.grid.size(), 1);
    EXPECT_THROW(picard_solve(rho0, PotentialQuadratic{0.05}, bad), ConfigError);
}

TEST(Picard, ZeroDensityConvergesInOneIteration) {
    SolverConfig cfg;
    cfg.mu = 2.0;
    const Field rho0(cfg.grid.size(), 1);
    const auto res = picard_solve(rho0, PotentialQuadratic{0.05}, cfg);
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.iterations.size(), 1u);
    for (std::size_t a = 0; a < cfg.grid.size(); ++a)
        EXPECT_NEAR(res.u.level(0)(a), -0.05 * cfg.grid.coordinate(a)[0] / 2.0, 1e-14);
}

TEST(Picard, ZeroPotentialHasStaticFixedPoint) {
    SolverConfig cfg;
    const auto rho0 =
        sample_scalar(cfg.grid, [](const Vec& x) { return 0.01 * std::exp(-2 * x[0] * x[0]) / std::sqrt(std::numbers::pi / 2); });
    const auto res = picard_solve(rho0, PotentialZero{}, cfg);
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.iterations.size(), 1u);
    for (std::size_t m = 0; m < res.u.level_count(); ++m)
        for (double v : res.u.level(m).data) EXPECT_EQ(v, 0.0);
    for (std::size_t a = 0; a < cfg.grid.size(); ++a) EXPECT_NEAR(res.rho.values.back()(a), rho0(a), 1e-14);
}

TEST(Picard, SmallDataContracts) {
    SolverConfig cfg;
    const double w = 0.5;
    const auto rho0 = sample_scalar(cfg.grid, [&](const Vec& x) {
        return 0.01 * std::exp(-x[0] * x[0] / (2 * w * w)) / (w * std::sqrt(2 * std::numbers::pi));
    });
    const auto res = picard_solve(rho0, PotentialQuadratic{0.05}, cfg);
    EXPECT_TRUE(res.report.converged);
    EXPECT_LT(res.report.max_ratio, 1.0);
    EXPECT_TRUE(res.report.all_in_ball);
    EXPECT_LT(res.report.continuity_residual, 1e-3);
    EXPECT_LT(res.report.closure_residual, 1e-3);
}

TEST(Picard, BallExitIsReported) {
    SolverConfig cfg;
    cfg.ball_radius = 1e-3;
    const Field rho0(cfg.grid.size(), 1);
    EXPECT_THROW(picard_solve(rho0, PotentialQuadratic{0.05}, cfg), PicardFailure);
}

TEST(CommutatorEstimates, ConstantVelocityGivesZeroRatio) {
    SolverConfig cfg;
    const auto grid = make_cube_grid(1, 8.0, 321);
    const auto rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    const Field u(grid.size(), 1, 1.0);
    const auto rep = verify_commutator_estimates({{"const", rho, u}}, grid, cfg);
    ASSERT_EQ(rep.samples.size(), 1u);
    EXPECT_LE(rep.samples[0].ratio_w1inf(), 1e-12);
}

TEST(CommutatorEstimates, AmplitudeInvariance) {
    SolverConfig cfg;
    const auto grid = make_cube_grid(1, 12.0, 481);
    const auto fam = dilation_family(grid, {1.0}, {{1.0, 1.0}, {3.0, 0.2}});
    const auto rep = verify_commutator_estimates(fam, grid, cfg);
    ASSERT_EQ(rep.samples.size(), 2u);
    const auto& a = rep.samples[0];
    const auto& b = rep.samples[1];
    EXPECT_NEAR(a.ratio_w1inf(), b.ratio_w1inf(), 1e-10 * a.ratio_w1inf());
    EXPECT_NEAR(a.ratio_low(), b.ratio_low(), 1e-10 * a.ratio_low());
    EXPECT_NEAR(a.ratio_high(), b.ratio_high(), 1e-10 * a.ratio_high());
}
