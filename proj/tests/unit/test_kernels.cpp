#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "cslab/errors.hpp"
#include "cslab/kernels.hpp"

using namespace cslab;

namespace {

using Big = boost::multiprecision::number<boost::multiprecision::cpp_dec_float<50>>;

Big big_kernel(double r, double eps, double lambda) {
    const Big c = boost::multiprecision::pow(Big(2), Big(1) / Big(lambda)) - 1;
    return boost::multiprecision::pow(Big(eps) * Big(eps) + c * Big(r) * Big(r), -Big(lambda));
}

}  // namespace

TEST(Kernels, CLambdaDefinition) {
    EXPECT_DOUBLE_EQ(c_lambda(0.5), 3.0);
    EXPECT_DOUBLE_EQ(c_lambda(1.0), 1.0);
    EXPECT_DOUBLE_EQ(c_lambda(0.25), 15.0);
}

TEST(Kernels, ClassicalExamples) {
    EXPECT_DOUBLE_EQ(influence_classical(0.0, 0.25), 1.0);
    EXPECT_NEAR(influence_classical(1.0, 0.5), 0.7071067812, 1e-10);
    EXPECT_NEAR(influence_classical(3.0, 1.0), 0.1, 1e-15);
}

TEST(Kernels, ScaledExamples) {
    for (double lambda : {0.05, 0.25, 0.4, 0.7})
        EXPECT_NEAR(influence_scaled(1.0, {lambda, 1.0, 2}), 0.5, 1e-15) << lambda;
    EXPECT_NEAR(influence_scaled(0.0, {0.25, 0.5, 1}), 1.4142135624, 1e-10);
    EXPECT_NEAR(influence_scaled(1.0, {0.5, 0.0, 2}), 0.5773502692, 1e-10);
}

TEST(Kernels, SingularOriginThrows) {
    EXPECT_THROW(influence_scaled(0.0, {0.25, 0.0, 1}), SingularityError);
}

TEST(Kernels, ParamsValidate) {
    EXPECT_THROW((KernelParams{0.5, 0.1, 1}.validate()), ConfigError);
    EXPECT_THROW((KernelParams{0.0, 0.1, 1}.validate()), ConfigError);
    EXPECT_THROW((KernelParams{0.25, -0.1, 1}.validate()), ConfigError);
    EXPECT_NO_THROW((KernelParams{0.9, 0.1, 2}.validate()));
}

TEST(Kernels, DimensionalExamples) {
    EXPECT_NEAR(influence_dimensional(0.0, {0.3, 2.0, 1.0}), 2.0, 1e-15);
    for (double sigma : {0.1, 1.0, 3.0})
        EXPECT_NEAR(influence_dimensional(sigma, {0.3, 5.0, sigma}), 2.5, 1e-14);
    EXPECT_NEAR(influence_dimensional(2.0, {0.5, 1.0, 1.0}), 0.2773500981, 1e-10);
}

TEST(Kernels, GapVanishesAtZeroEpsilon) { EXPECT_EQ(kernel_gap(1.0, {0.3, 0.0, 1}), 0.0); }

TEST(Kernels, GapBelowBoundExample) {
    const KernelParams p{0.25, 0.1, 1};
    const double gap = kernel_gap(1.0, p);
    EXPECT_LE(gap, 0.25 / (0.5 * std::sqrt(15.0)) * std::sqrt(0.1));
    EXPECT_NEAR(kernel_gap_bound(1.0, p), 0.04082, 1e-5);
}

TEST(Kernels, GapMatchesHighPrecision) {
    const double r = 0.5, eps = 0.2, lambda = 0.3;
    const Big exact = big_kernel(r, 0.0, lambda) - big_kernel(r, eps, lambda);
    const double gap = kernel_gap(r, {lambda, eps, 1});
    EXPECT_NEAR(gap, exact.convert_to<double>(), 1e-14 * exact.convert_to<double>());
    EXPECT_LE(gap, kernel_gap_bound(r, {lambda, eps, 1}));
}

TEST(Kernels, GapAccurateWhereCancellationIsSevere) {
    const double r = 100.0, eps = 1e-3, lambda = 0.2;
    const double exact = (big_kernel(r, 0.0, lambda) - big_kernel(r, eps, lambda)).convert_to<double>();
    EXPECT_NEAR(kernel_gap(r, {lambda, eps, 1}), exact, 1e-10 * exact);
}

TEST(Kernels, GapConstantDomain) { EXPECT_THROW(kernel_gap_constant(0.5), DomainError); }

TEST(Kernels, MajorantsHoldOnRandomSamples) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double r = std::pow(10.0, -3.0 + 6.0 * u(gen));
        const KernelParams p{0.01 + 0.48 * u(gen), 1e-3 + u(gen) * (1 - 1e-3), 1};
        const double phi = influence_scaled(r, p);
        EXPECT_LE(phi, kernel_singular_majorant(r, p) * (1 + 1e-12));
        EXPECT_LE(phi, kernel_regular_majorant(p) * (1 + 1e-12));
        EXPECT_LE(kernel_gap(r, p), kernel_gap_bound(r, p) * (1 + 1e-12));
    }
}

TEST(Kernels, PowerKernelFastPathsAgree) {
    for (double lambda : {0.25, 0.5}) {
        const PowerKernel fast(1.0, 0.3, 2.0, lambda);
        for (double r2 : {0.0, 0.1, 5.0, 1e4})
            EXPECT_NEAR(fast(r2), std::pow(0.3 + 2.0 * r2, -lambda), 1e-15 * std::pow(0.3 + 2.0 * r2, -lambda));
    }
}

TEST(HKernel, ConstantTestFunctionGivesZero) {
    const VectorTestFunction g{"const", [](double, const Vec&) { return Vec{2.0, -1.0, 0.0}; }, 0.0};
    const Vec h = h_kernel(g, 0.0, {0.1, 0.2, 0}, {0.5, -0.3, 0}, {0.25, 0.1, 2});
    EXPECT_EQ(h[0], 0.0);
    EXPECT_EQ(h[1], 0.0);
}

TEST(HKernel, DiagonalGivesZero) {
    const VectorTestFunction g{"sin", [](double, const Vec& x) { return Vec{std::sin(x[0]), 0, 0}; }, 1.0};
    const Vec h = h_kernel(g, 0.0, {0.7, 0, 0}, {0.7, 0, 0}, {0.25, 0.1, 1});
    EXPECT_EQ(h[0], 0.0);
}

TEST(HKernel, LinearSaturatesSingularBound) {
    const VectorTestFunction g{"id", [](double, const Vec& x) { return x; }, 1.0};
    const KernelParams p{0.25, 0.0, 1};
    const double x = 1.3, y = -0.4, r = x - y;
    const Vec h = h_kernel(g, 0.0, {x, 0, 0}, {y, 0, 0}, p);
    const double expected = std::pow(r, 0.5) / std::pow(c_lambda(0.25), 0.25);
    EXPECT_NEAR(std::abs(h[0]), expected, 1e-14 * expected);
    EXPECT_NEAR(h_kernel_bounds(1.0, r, p).singular, expected, 1e-14 * expected);
}

TEST(Riesz, ZeroFieldGivesZero) {
    const auto grid = make_cube_grid(1, 4.0, 65);
    const auto out = riesz_potential(Field(grid.size(), 1), 0.5, grid);
    for (double v : out.values.data) EXPECT_EQ(v, 0.0);
}

TEST(Riesz, PointMassGivesKernel) {
    const auto grid = make_cube_grid(1, 4.0, 81);
    Field f(grid.size(), 1);
    const std::size_t mid = grid.size() / 2;
    f(mid) = 1.0 / grid.cell_volume();
    const auto out = riesz_potential(f, 0.5, grid);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double r = std::abs(grid.coordinate(a)[0]);
        if (r < 0.5) continue;
        EXPECT_NEAR(out.values(a), std::pow(r, -0.5), 1e-12 * std::pow(r, -0.5));
    }
}

TEST(Riesz, GaussianMatchesFineQuadrature) {
    const double alpha = 0.5, beta = 1.0 - alpha;
    const auto grid = make_cube_grid(1, 6.0, 481);
    const auto f = sample_scalar(grid, [](const Vec& x) { return std::exp(-x[0] * x[0]); });
    const auto out = riesz_potential(f, alpha, grid);
    // Reference: substitute y = x + s, split at s = 0, and use s = t^2 to remove the singularity.
    auto reference = [&](double x) {
        const std::size_t m = 1'000'000;
        const double tmax = std::sqrt(20.0);
        const double h = tmax / static_cast<double>(m);
        double sum = 0.0;
        for (std::size_t i = 0; i <= m; ++i) {
            const double t = h * static_cast<double>(i);
            const double s = t * t;
            const double w = (i == 0 || i == m) ? 0.5 : 1.0;
            const double g = std::exp(-(x + s) * (x + s)) + std::exp(-(x - s) * (x - s));
            sum += w * g * 2.0 * std::pow(t, 1.0 - 2.0 * beta);
        }
        return sum * h;
    };
    for (double x : {0.0, 0.5, 1.25, 2.0}) {
        const std::size_t a = static_cast<std::size_t>(std::lround((x + 6.0) / grid.spacing(0)));
        const double ref = reference(grid.coordinate(a)[0]);
        EXPECT_NEAR(out.values(a), ref, 1e-3 * ref) << x;
    }
}

TEST(Convolution, DifferenceIgnoresSelfCellAndConstants) {
    const auto grid = make_cube_grid(2, 2.0, 21);
    const ConvolutionWeights w(grid, PowerKernel::scaled({0.25, 0.0, 2}));
    const auto rho = sample_scalar(grid, [](const Vec& x) { return std::exp(-norm_sq(x)); });
    const Field u(grid.size(), 2, 3.5);
    const auto out = w.apply_difference(u, rho);
    for (double v : out.data) EXPECT_EQ(v, 0.0);
}
