#include "cslab/grid.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cslab/errors.hpp"

namespace cslab {

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("grid dim must be 1, 2 or 3");
    for (int a = 0; a < dim; ++a) {
        if (!(hi[a] > lo[a])) throw ConfigError("grid axis " + std::to_string(a) + " needs hi > lo");
        if (nodes[a] < 2) throw ConfigError("grid axis " + std::to_string(a) + " needs at least 2 nodes");
    }
}

std::size_t GridSpec::size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= nodes[a];
    return n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing(a);
    return v;
}

// Axis 0 varies fastest.
Index GridSpec::unflatten(std::size_t flat) const {
    Index idx{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        idx[a] = flat % nodes[a];
        flat /= nodes[a];
    }
    return idx;
}

std::size_t GridSpec::flatten(const Index& idx) const {
    std::size_t flat = 0;
    for (int a = dim - 1; a >= 0; --a) flat = flat * nodes[a] + idx[a];
    return flat;
}

Vec GridSpec::coordinate(std::size_t flat) const {
    const Index idx = unflatten(flat);
    Vec x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = lo[a] + static_cast<double>(idx[a]) * spacing(a);
    return x;
}

bool GridSpec::contains(const Vec& x) const {
    for (int a = 0; a < dim; ++a)
        if (!(x[a] >= lo[a] && x[a] <= hi[a])) return false;
    return true;
}

GridSpec make_cube_grid(int dim, double half_width, std::size_t nodes_per_axis) {
    GridSpec g;
    g.dim = dim;
    g.lo = {0.0, 0.0, 0.0};
    g.hi = {0.0, 0.0, 0.0};
    g.nodes = {1, 1, 1};
    for (int a = 0; a < dim; ++a) {
        g.lo[a] = -half_width;
        g.hi[a] = half_width;
        g.nodes[a] = nodes_per_axis;
    }
    g.validate();
    return g;
}

Field partial_derivative(const GridSpec& grid, const Field& f, std::size_t component, int axis) {
    const std::size_t n = grid.size();
    Field out(n, 1);
    const double h = grid.spacing(axis);
    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= grid.nodes[a];
    const std::size_t m = grid.nodes[axis];
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t i = (p / stride) % m;
        double d;
        if (i == 0)
            d = (f(p + stride, component) - f(p, component)) / h;
        else if (i + 1 == m)
            d = (f(p, component) - f(p - stride, component)) / h;
        else
            d = (f(p + stride, component) - f(p - stride, component)) / (2.0 * h);
        out(p) = d;
    }
    return out;
}

Field divergence(const GridSpec& grid, const Field& f) {
    Field out(grid.size(), 1);
    for (int a = 0; a < grid.dim; ++a) {
        const Field d = partial_derivative(grid, f, static_cast<std::size_t>(a), a);
        for (std::size_t p = 0; p < out.data.size(); ++p) out.data[p] += d.data[p];
    }
    return out;
}

double interpolate(const GridSpec& grid, const Field& f, std::size_t component, const Vec& x) {
    Index base{0, 0, 0};
    Vec frac{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dim; ++a) {
        const double s = (x[a] - grid.lo[a]) / grid.spacing(a);
        const double top = static_cast<double>(grid.nodes[a] - 2);
        const double cell = std::clamp(std::floor(s), 0.0, top);
        base[a] = static_cast<std::size_t>(cell);
        frac[a] = std::clamp(s - cell, 0.0, 1.0);
    }
    double acc = 0.0;
    const unsigned corners = 1u << grid.dim;
    for (unsigned mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        Index idx = base;
        for (int a = 0; a < grid.dim; ++a) {
            if (mask & (1u << a)) {
                w *= frac[a];
                idx[a] += 1;
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if (w != 0.0) acc += w * f(grid.flatten(idx), component);
    }
    return acc;
}

double integrate(const GridSpec& grid, const Field& f, std::size_t component) {
    double s = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) s += f(p, component);
    return s * grid.cell_volume();
}

double lp_norm(const GridSpec& grid, const Field& f, double p) {
    const std::size_t n = grid.size();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            double s = 0.0;
            for (std::size_t c = 0; c < f.components; ++c) s += f(a, c) * f(a, c);
            m = std::max(m, std::sqrt(s));
        }
        return m;
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::size_t c = 0; c < f.components; ++c) s += f(a, c) * f(a, c);
        acc += std::pow(std::sqrt(s), p);
    }
    return std::pow(acc * grid.cell_volume(), 1.0 / p);
}

}  // namespace cslab
