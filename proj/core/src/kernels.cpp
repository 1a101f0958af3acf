#include "cslab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cslab/errors.hpp"
#include "cslab/parallel.hpp"

namespace cslab {

namespace {

void require_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError("kernel exponent lambda must be positive, got " + std::to_string(lambda));
}

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Integral over the box prod [c_i - a_i, c_i + a_i] of fn(y) by tensor Gauss-Legendre.
template <class Fn>
double box_gauss(int dim, const Vec& centre, const Vec& half, Fn&& fn) {
    Vec y{0.0, 0.0, 0.0};
    std::function<double(int)> level = [&](int axis) -> double {
        if (axis == dim) return fn(y);
        return Gauss::integrate(
            [&](double s) {
                y[axis] = s;
                return level(axis + 1);
            },
            centre[axis] - half[axis], centre[axis] + half[axis]);
    };
    return level(0);
}

// Integral over [0, a_0] x ... of fn(y) with tanh-sinh, which clusters nodes at the origin corner.
template <class Fn>
double corner_tanh_sinh(int dim, const Vec& half, Fn&& fn) {
    boost::math::quadrature::tanh_sinh<double> ts;
    Vec y{0.0, 0.0, 0.0};
    std::function<double(int)> level = [&](int axis) -> double {
        if (axis == dim) return fn(y);
        return ts.integrate(
            [&](double s) {
                y[axis] = s;
                return level(axis + 1);
            },
            0.0, half[axis], 1e-12);
    };
    return level(0);
}

}  // namespace

double c_lambda(double lambda) {
    require_lambda(lambda);
    return std::exp2(1.0 / lambda) - 1.0;
}

void KernelParams::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("kernel dim must be 1, 2 or 3");
    if (!(lambda > 0.0)) throw ConfigError("kernel lambda must be > 0");
    if (!(lambda < 0.5 * dim))
        throw ConfigError("kernel lambda must be < dim/2 (lambda=" + std::to_string(lambda) +
                          ", dim=" + std::to_string(dim) + ")");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("kernel epsilon must be >= 0");
}

void DimensionalKernelParams::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("kernel lambda must be > 0");
    if (!(strength > 0.0)) throw ConfigError("kernel strength K must be > 0");
    if (!(range > 0.0)) throw ConfigError("kernel range sigma must be > 0");
}

PowerKernel::PowerKernel(double prefactor, double shift, double scale, double lambda)
    : prefactor_(prefactor), shift_(shift), scale_(scale), lambda_(lambda) {
    if (lambda == 0.25)
        mode_ = Mode::quarter;
    else if (lambda == 0.5)
        mode_ = Mode::half;
    else
        mode_ = Mode::general;
}

PowerKernel PowerKernel::classical(double lambda) {
    require_lambda(lambda);
    return {1.0, 1.0, 1.0, lambda};
}

PowerKernel PowerKernel::scaled(const KernelParams& p) {
    return {1.0, p.epsilon * p.epsilon, c_lambda(p.lambda), p.lambda};
}

PowerKernel PowerKernel::dimensional(const DimensionalKernelParams& p) {
    const double s2 = p.range * p.range;
    return {p.strength * std::pow(s2, p.lambda), s2, c_lambda(p.lambda), p.lambda};
}

PowerKernel PowerKernel::riesz(double beta) {
    if (!(beta > 0.0)) throw DomainError("Riesz exponent must be positive");
    return {1.0, 0.0, 1.0, 0.5 * beta};
}

double influence_classical(double r, double lambda) {
    require_lambda(lambda);
    if (!(r >= 0.0)) throw DomainError("distance must be nonnegative");
    return PowerKernel::classical(lambda)(r * r);
}

double influence_scaled_sq(double r2, const KernelParams& params) {
    require_lambda(params.lambda);
    if (!(params.epsilon >= 0.0)) throw DomainError("epsilon must be nonnegative");
    if (!(r2 >= 0.0)) throw DomainError("distance must be nonnegative");
    if (params.epsilon == 0.0 && r2 == 0.0)
        throw SingularityError("singular kernel evaluated at r = 0");
    return PowerKernel::scaled(params)(r2);
}

double influence_scaled(double r, const KernelParams& params) {
    if (!(r >= 0.0)) throw DomainError("distance must be nonnegative");
    return influence_scaled_sq(r * r, params);
}

double influence_dimensional(double r, const DimensionalKernelParams& params) {
    params.validate();
    if (!(r >= 0.0)) throw DomainError("distance must be nonnegative");
    return PowerKernel::dimensional(params)(r * r);
}

double kernel_singular_majorant(double r, const KernelParams& params) {
    require_lambda(params.lambda);
    if (!(r > 0.0)) throw SingularityError("singular kernel evaluated at r = 0");
    return std::pow(params.c() * r * r, -params.lambda);
}

double kernel_regular_majorant(const KernelParams& params) {
    require_lambda(params.lambda);
    if (!(params.epsilon > 0.0)) throw SingularityError("eps^(-2 lambda) is infinite at eps = 0");
    return std::pow(params.epsilon, -2.0 * params.lambda);
}

double kernel_gap(double r, const KernelParams& params) {
    require_lambda(params.lambda);
    if (!(r > 0.0)) throw DomainError("kernel_gap needs r > 0");
    if (!(params.epsilon >= 0.0)) throw DomainError("epsilon must be nonnegative");
    if (params.epsilon == 0.0) return 0.0;
    // phi_0 - phi_eps = phi_0 (1 - (1 + z)^(-lambda)) with z = eps^2 / (c r^2).
    const double c = params.c();
    const double z = params.epsilon * params.epsilon / (c * r * r);
    const double phi0 = std::pow(c * r * r, -params.lambda);
    return -phi0 * std::expm1(-params.lambda * std::log1p(z));
}

double kernel_gap_constant(double lambda) {
    require_lambda(lambda);
    if (lambda >= 0.5)
        throw DomainError("gap constant is defined for lambda < 1/2 only, got " + std::to_string(lambda));
    return lambda / ((1.0 - 2.0 * lambda) * std::sqrt(c_lambda(lambda)));
}

double kernel_gap_bound(double r, const KernelParams& params) {
    if (!(r > 0.0)) throw DomainError("kernel_gap_bound needs r > 0");
    return kernel_gap_constant(params.lambda) * std::pow(params.epsilon, 1.0 - 2.0 * params.lambda) / r;
}

Vec h_kernel(const VectorTestFunction& g, double t, const Vec& x, const Vec& y,
             const KernelParams& params) {
    const Vec d = x - y;
    const double r2 = norm_sq(d);
    if (r2 == 0.0) {
        if (params.epsilon == 0.0) {
            if (params.lambda > 0.5)
                throw SingularityError("H kernel is unbounded on the diagonal for lambda > 1/2");
            if (params.lambda == 0.5)
                throw DomainError("H kernel has no diagonal limit at lambda = 1/2");
        }
        return {0.0, 0.0, 0.0};
    }
    const double phi = influence_scaled_sq(r2, params);
    return phi * (g.value(t, x) - g.value(t, y));
}

HKernelBounds h_kernel_bounds(double lipschitz, double r, const KernelParams& params) {
    HKernelBounds b{};
    b.singular = std::pow(params.c(), -params.lambda) * lipschitz * std::pow(r, 1.0 - 2.0 * params.lambda);
    b.regular = params.epsilon > 0.0 ? std::pow(params.epsilon, -2.0 * params.lambda) * lipschitz * r
                                     : INFINITY;
    b.gap = kernel_gap_constant(params.lambda) * lipschitz *
            std::pow(params.epsilon, 1.0 - 2.0 * params.lambda);
    return b;
}

double singular_cell_integral(const GridSpec& grid, double beta) {
    const int n = grid.dim;
    if (!(beta < n)) throw DomainError("cell integral of |y|^-beta diverges for beta >= N");
    Vec half{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) half[a] = 0.5 * grid.spacing(a);
    // Divergence theorem: the integral equals (1/(N - beta)) times the flux of y |y|^-beta
    // through the cell boundary, and each face integrand is smooth.
    double flux = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ai = half[i];
        Vec fh{0.0, 0.0, 0.0}, fc{0.0, 0.0, 0.0};
        int m = 0;
        for (int a = 0; a < n; ++a)
            if (a != i) fh[m++] = half[a];
        const double face = m == 0 ? std::pow(ai, -beta)
                                   : box_gauss(m, fc, fh, [&](const Vec& z) {
                                         return std::pow(ai * ai + norm_sq(z), -0.5 * beta);
                                     });
        flux += 2.0 * ai * face;
    }
    return flux / (n - beta);
}

ConvolutionWeights::ConvolutionWeights(const GridSpec& grid, const PowerKernel& kernel, int near)
    : grid_(grid) {
    grid_.validate();
    const int n = grid_.dim;
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) {
        extent_[a] = 2 * grid_.nodes[a] - 1;
        total *= extent_[a];
    }
    table_.assign(total, 0.0);
    Vec h{0.0, 0.0, 0.0}, half{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) {
        h[a] = grid_.spacing(a);
        half[a] = 0.5 * h[a];
    }
    const double vol = grid_.cell_volume();
    const auto radial = [&](const Vec& y) { return kernel(norm_sq(y)); };

    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            std::size_t rest = t;
            Vec centre{0.0, 0.0, 0.0};
            long maxoff = 0;
            for (int a = 0; a < n; ++a) {
                const long off = static_cast<long>(rest % extent_[a]) - static_cast<long>(grid_.nodes[a] - 1);
                rest /= extent_[a];
                centre[a] = static_cast<double>(off) * h[a];
                maxoff = std::max(maxoff, std::labs(off));
            }
            double w;
            if (maxoff == 0) {
                if (kernel.singular()) {
                    // prefactor * (scale |y|^2)^(-lambda) = prefactor * scale^(-lambda) |y|^(-2 lambda)
                    w = kernel.prefactor() * std::pow(kernel.scale(), -kernel.lambda()) *
                        singular_cell_integral(grid_, 2.0 * kernel.lambda());
                } else {
                    w = std::exp2(n) * corner_tanh_sinh(n, half, radial);
                }
            } else if (maxoff <= near) {
                w = box_gauss(n, centre, half, radial);
            } else {
                w = kernel(norm_sq(centre)) * vol;
            }
            table_[t] = w;
        }
    });
    Index zero{0, 0, 0};
    self_ = table_[offset_index(zero, zero)];
}

std::size_t ConvolutionWeights::offset_index(const Index& target, const Index& source) const {
    std::size_t t = 0;
    for (int a = grid_.dim - 1; a >= 0; --a)
        t = t * extent_[a] + (target[a] + grid_.nodes[a] - 1 - source[a]);
    return t;
}

double ConvolutionWeights::weight(const Index& target, const Index& source) const {
    return table_[offset_index(target, source)];
}

namespace {

// Calls body(b_start, t_start, len): for k < len the source node b_start + k pairs with
// table entry t_start - k. Runs follow axis 0 of the source grid.
template <class Body>
void visit_row(const GridSpec& g, const Index& extent, const Index& target, Body&& body) {
    const std::size_t n1 = g.dim > 1 ? g.nodes[1] : 1;
    const std::size_t n2 = g.dim > 2 ? g.nodes[2] : 1;
    const std::size_t n0 = g.nodes[0];
    for (std::size_t j2 = 0; j2 < n2; ++j2) {
        for (std::size_t j1 = 0; j1 < n1; ++j1) {
            const std::size_t b = (j2 * n1 + j1) * n0;
            std::size_t t = target[0] + n0 - 1;
            if (g.dim > 1) t += (target[1] + n1 - 1 - j1) * extent[0];
            if (g.dim > 2) t += (target[2] + n2 - 1 - j2) * extent[0] * extent[1];
            body(b, t, n0);
        }
    }
}

std::vector<std::vector<double>> split_components(const Field& f) {
    const std::size_t n = f.node_count();
    std::vector<std::vector<double>> out(f.components, std::vector<double>(n));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t c = 0; c < f.components; ++c) out[c][p] = f(p, c);
    return out;
}

}  // namespace

Field ConvolutionWeights::apply_impl(const Field& f, bool include_self) const {
    const std::size_t n = grid_.size();
    if (f.node_count() != n) throw DomainError("field does not match the convolution grid");
    const auto comps = split_components(f);
    Field out(n, f.components);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) {
            const Index ia = grid_.unflatten(a);
            for (std::size_t c = 0; c < f.components; ++c) {
                const double* src = comps[c].data();
                double acc = 0.0;
                visit_row(grid_, extent_, ia, [&](std::size_t b, std::size_t t, std::size_t len) {
                    const double* w = table_.data() + t;
                    for (std::size_t k = 0; k < len; ++k) acc += *(w - k) * src[b + k];
                });
                if (!include_self) acc -= self_ * src[a];
                out(a, c) = acc;
            }
        }
    });
    return out;
}

Field ConvolutionWeights::apply_difference(const Field& u, const Field& rho) const {
    const std::size_t n = grid_.size();
    if (u.node_count() != n || rho.node_count() != n || rho.components != 1)
        throw DomainError("fields do not match the convolution grid");
    const auto comps = split_components(u);
    const double* r = rho.data.data();
    Field out(n, u.components);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) {
            const Index ia = grid_.unflatten(a);
            for (std::size_t c = 0; c < u.components; ++c) {
                const double* src = comps[c].data();
                const double ua = src[a];
                double acc = 0.0;
                visit_row(grid_, extent_, ia, [&](std::size_t b, std::size_t t, std::size_t len) {
                    const double* w = table_.data() + t;
                    for (std::size_t k = 0; k < len; ++k) acc += (ua - src[b + k]) * *(w - k) * r[b + k];
                });
                out(a, c) = acc;
            }
        }
    });
    return out;
}

Field ConvolutionWeights::apply(const Field& f) const { return apply_impl(f, true); }

Field ConvolutionWeights::apply_off_diagonal(const Field& f) const { return apply_impl(f, false); }

RieszResult riesz_potential(const Field& f, double alpha, const GridSpec& grid, double warn_fraction) {
    grid.validate();
    if (!(alpha > 0.0 && alpha < grid.dim))
        throw DomainError("Riesz order alpha must lie in (0, N)");
    if (f.components != 1 || f.node_count() != grid.size())
        throw DomainError("riesz_potential expects a scalar field on the grid");
    const ConvolutionWeights weights(grid, PowerKernel::riesz(grid.dim - alpha));
    RieszResult res;
    res.values = weights.apply(f);
    Field abs_f = f;
    for (double& v : abs_f.data) v = std::fabs(v);
    const Field abs_total = weights.apply(abs_f);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        if (abs_total(a) > 0.0)
            res.singular_fraction = std::max(res.singular_fraction, weights.self_weight() * abs_f(a) / abs_total(a));
    }
    res.coarse_warning = res.singular_fraction > warn_fraction;
    return res;
}

}  // namespace cslab
