#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cslab {

/// Point or vector in R^N, N <= 3; unused trailing components stay zero.
using Vec = std::array<double, 3>;
using Index = std::array<std::size_t, 3>;

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm_sq(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Uniform tensor grid on a box in R^N, nodes include both endpoints.
struct GridSpec {
    int dim = 1;
    Vec lo{0.0, 0.0, 0.0};
    Vec hi{1.0, 1.0, 1.0};
    Index nodes{2, 1, 1};

    /// Throws ConfigError unless 1 <= dim <= 3, hi > lo and nodes >= 2 on active axes.
    void validate() const;

    double spacing(int axis) const {
        return (hi[axis] - lo[axis]) / static_cast<double>(nodes[axis] - 1);
    }
    std::size_t size() const;
    double cell_volume() const;

    Index unflatten(std::size_t flat) const;
    std::size_t flatten(const Index& idx) const;
    Vec coordinate(std::size_t flat) const;
    bool contains(const Vec& x) const;
};

/// 1D, 2D or 3D grid over a symmetric box [-half_width, half_width]^dim.
GridSpec make_cube_grid(int dim, double half_width, std::size_t nodes_per_axis);

/**
 * @brief Node-major field with a fixed number of components per node.
 *
 * Scalar fields have one component, vector fields have dim components.
 */
struct Field {
    std::size_t components = 1;
    std::vector<double> data;

    Field() = default;
    Field(std::size_t node_count, std::size_t comps, double fill = 0.0)
        : components(comps), data(node_count * comps, fill) {}

    std::size_t node_count() const { return components == 0 ? 0 : data.size() / components; }
    double& operator()(std::size_t node, std::size_t c = 0) { return data[node * components + c]; }
    double operator()(std::size_t node, std::size_t c = 0) const { return data[node * components + c]; }
};

/// Builds a field by sampling fn(x) at every node; fn returns a Vec, of which `components` are kept.
template <class Fn>
Field sample_vector(const GridSpec& grid, std::size_t components, Fn&& fn) {
    Field f(grid.size(), components);
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const Vec v = fn(grid.coordinate(a));
        for (std::size_t c = 0; c < components; ++c) f(a, c) = v[c];
    }
    return f;
}

template <class Fn>
Field sample_scalar(const GridSpec& grid, Fn&& fn) {
    Field f(grid.size(), 1);
    for (std::size_t a = 0; a < grid.size(); ++a) f(a) = fn(grid.coordinate(a));
    return f;
}

/// Derivative of one component along an axis: centered inside, one-sided at the box faces.
Field partial_derivative(const GridSpec& grid, const Field& f, std::size_t component, int axis);

/// Discrete divergence of a vector field (sum of partial derivatives).
Field divergence(const GridSpec& grid, const Field& f);

/// Multilinear interpolation of one component; x must lie inside the box.
double interpolate(const GridSpec& grid, const Field& f, std::size_t component, const Vec& x);

/// Riemann sum of one component times the cell volume.
double integrate(const GridSpec& grid, const Field& f, std::size_t component = 0);

/// Discrete L^p norm of the pointwise Euclidean magnitude (p = infinity gives the grid maximum).
double lp_norm(const GridSpec& grid, const Field& f, double p);

}  // namespace cslab
