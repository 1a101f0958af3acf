#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cslab/grid.hpp"

namespace cslab {

/// 2^(1/lambda) - 1, the constant that puts the half-value point of the scaled kernel at r = epsilon.
double c_lambda(double lambda);

/// Scaled influence function (eps^2 + c r^2)^(-lambda); eps = 0 is the singular limit.
struct KernelParams {
    double lambda = 0.25;
    double epsilon = 0.0;
    int dim = 1;

    double c() const { return c_lambda(lambda); }
    /// Throws ConfigError unless 0 < lambda < dim/2 and epsilon >= 0.
    void validate() const;
};

/// K sigma^(2 lambda) / (sigma^2 + c r^2)^lambda; equals K at 0 and K/2 at r = sigma.
struct DimensionalKernelParams {
    double lambda = 0.25;
    double strength = 1.0;
    double range = 1.0;

    double c() const { return c_lambda(lambda); }
    void validate() const;
};

/**
 * @brief prefactor * (shift + scale * r^2)^(-lambda), evaluated from r^2.
 *
 * Shared by the scalar kernel functions and the O(n^2) loops so that both
 * produce identical bits. Exponents 1/4 and 1/2 use square roots.
 */
class PowerKernel {
public:
    PowerKernel(double prefactor, double shift, double scale, double lambda);

    static PowerKernel classical(double lambda);
    static PowerKernel scaled(const KernelParams& p);
    static PowerKernel dimensional(const DimensionalKernelParams& p);
    /// |y|^(-beta), the Riesz kernel with order N - beta.
    static PowerKernel riesz(double beta);

    double operator()(double r2) const {
        const double s = shift_ + scale_ * r2;
        switch (mode_) {
            case Mode::quarter: return prefactor_ / std::sqrt(std::sqrt(s));
            case Mode::half: return prefactor_ / std::sqrt(s);
            default: return prefactor_ * std::pow(s, -lambda_);
        }
    }

    double prefactor() const { return prefactor_; }
    double shift() const { return shift_; }
    double scale() const { return scale_; }
    double lambda() const { return lambda_; }
    bool singular() const { return shift_ == 0.0; }

private:
    enum class Mode { quarter, half, general };
    double prefactor_, shift_, scale_, lambda_;
    Mode mode_;
};

double influence_classical(double r, double lambda);
/// Throws SingularityError for r = 0 with epsilon = 0.
double influence_scaled(double r, const KernelParams& params);
/// Same as influence_scaled but takes r^2.
double influence_scaled_sq(double r2, const KernelParams& params);
double influence_dimensional(double r, const DimensionalKernelParams& params);

/// |phi_eps(r) - phi_0(r)|, evaluated without cancellation.
double kernel_gap(double r, const KernelParams& params);
/// lambda / ((1 - 2 lambda) sqrt(c_lambda)); DomainError for lambda >= 1/2.
double kernel_gap_constant(double lambda);
/// kernel_gap_constant * eps^(1 - 2 lambda) / r.
double kernel_gap_bound(double r, const KernelParams& params);
/// c^(-lambda) r^(-2 lambda), the majorant of every phi_eps.
double kernel_singular_majorant(double r, const KernelParams& params);
/// eps^(-2 lambda), the value at the origin.
double kernel_regular_majorant(const KernelParams& params);

/// Smooth vector test function with a known Lipschitz constant.
struct VectorTestFunction {
    std::string name;
    std::function<Vec(double, const Vec&)> value;
    double lipschitz = 0.0;
};

/// phi_eps(|x - y|) (g(t, x) - g(t, y)).
Vec h_kernel(const VectorTestFunction& g, double t, const Vec& x, const Vec& y,
             const KernelParams& params);

struct HKernelBounds {
    double singular;  ///< c^(-lambda) Lip |x-y|^(1-2 lambda)
    double regular;   ///< eps^(-2 lambda) Lip |x-y|
    double gap;       ///< C_lambda Lip eps^(1-2 lambda)
};
HKernelBounds h_kernel_bounds(double lipschitz, double r, const KernelParams& params);

/// Integral of |y|^(-beta) over the grid cell centred at the origin (beta < N).
double singular_cell_integral(const GridSpec& grid, double beta);

/**
 * @brief Quadrature weights of a radial kernel over all node offsets of a grid.
 *
 * Cells within `near` offsets of the target are integrated exactly (the self
 * cell analytically when the kernel is singular); farther cells use the
 * midpoint value times the cell volume.
 */
class ConvolutionWeights {
public:
    ConvolutionWeights(const GridSpec& grid, const PowerKernel& kernel, int near = 2);

    /// out(a) = sum_b W(a - b) f(b), applied per component.
    Field apply(const Field& f) const;
    /// Same sum with the self cell left out.
    Field apply_off_diagonal(const Field& f) const;
    /// out(a) = sum_b (u(a) - u(b)) W(a - b) rho(b); the self cell drops out exactly.
    Field apply_difference(const Field& u, const Field& rho) const;

    double self_weight() const { return self_; }
    double weight(const Index& target, const Index& source) const;

private:
    Field apply_impl(const Field& f, bool include_self) const;
    std::size_t offset_index(const Index& target, const Index& source) const;

    GridSpec grid_;
    std::vector<double> table_;
    Index extent_{1, 1, 1};
    double self_ = 0.0;
};

struct RieszResult {
    Field values;
    /// Largest share of a node value contributed by its own cell.
    double singular_fraction = 0.0;
    bool coarse_warning = false;
};

/// Quadrature of the integral of f(y) |x - y|^(-(N - alpha)) dy, without normalizing constant.
RieszResult riesz_potential(const Field& f, double alpha, const GridSpec& grid,
                            double warn_fraction = 0.5);

}  // namespace cslab
