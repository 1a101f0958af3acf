#include "cslab/moments.hpp"

#include <algorithm>
#include <cmath>

#include "cslab/errors.hpp"
#include "cslab/parallel.hpp"

namespace cslab {

std::size_t sym_count(int dim) { return static_cast<std::size_t>(dim * (dim + 1) / 2); }

std::size_t sym_index(int a, int b, int dim) {
    if (a > b) std::swap(a, b);
    // Row-major over the upper triangle.
    return static_cast<std::size_t>(a * dim - a * (a - 1) / 2 + (b - a));
}

std::size_t triple_count(int dim) { return static_cast<std::size_t>(dim * (dim + 1) * (dim + 2) / 6); }

std::size_t triple_index(int a, int b, int c, int dim) {
    int s[3] = {a, b, c};
    std::sort(s, s + 3);
    std::size_t idx = 0;
    for (int p = 0; p < dim; ++p)
        for (int q = p; q < dim; ++q)
            for (int r = q; r < dim; ++r, ++idx)
                if (p == s[0] && q == s[1] && r == s[2]) return idx;
    throw DomainError("triple index out of range");
}

namespace {

double bspline2(double u) {
    u = std::fabs(u);
    if (u < 0.5) return 0.75 - u * u;
    if (u < 1.5) return 0.5 * (1.5 - u) * (1.5 - u);
    return 0.0;
}

struct AxisStencil {
    long first = 0;
    int count = 0;
    double w[16] = {};
    double inside = 0.0;  // share of the stencil on grid nodes
};

AxisStencil axis_stencil(double s, double b, std::size_t nodes) {
    AxisStencil st;
    const double reach = 1.5 * b;
    const long lo = static_cast<long>(std::ceil(s - reach));
    const long hi = static_cast<long>(std::floor(s + reach));
    st.first = lo;
    st.count = static_cast<int>(std::min<long>(hi - lo + 1, 16));
    double all = 0.0, in = 0.0;
    for (int k = 0; k < st.count; ++k) {
        const double w = bspline2((static_cast<double>(lo + k) - s) / b);
        st.w[k] = w;
        all += w;
        const long m = lo + k;
        if (m >= 0 && m < static_cast<long>(nodes)) in += w;
    }
    for (int k = 0; k < st.count; ++k) st.w[k] /= all;
    st.inside = in / all;
    return st;
}

}  // namespace

MomentFields empirical_moments(const ParticleEnsemble& state, const GridSpec& grid, const DepositionOptions& opt) {
    state.validate();
    grid.validate();
    if (state.dim != grid.dim) throw DomainError("ensemble and grid dimensions differ");
    if (!(opt.bandwidth > 0.0) || opt.bandwidth > 5.0) throw DomainError("bandwidth must lie in (0, 5] cells");
    const int n = grid.dim;
    const std::size_t ns = sym_count(n), nt = triple_count(n);
    const bool fric = opt.friction_exponent.has_value();
    // Layout per node: rho | j | S | T | q | Q.
    const std::size_t o_j = 1, o_s = o_j + n, o_t = o_s + ns, o_q = o_t + nt, o_fs = o_q + (fric ? n : 0);
    const std::size_t comps = o_fs + (fric ? ns : 0);
    const std::size_t nodes = grid.size();
    const double inv_vol = 1.0 / grid.cell_volume();

    constexpr std::size_t kBlock = 4096;
    const std::size_t np = state.size();
    const std::size_t blocks = (np + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> buffers(blocks);
    std::vector<double> escaped(blocks, 0.0);

    parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t blk = b0; blk < b1; ++blk) {
            auto& buf = buffers[blk];
            buf.assign(nodes * comps, 0.0);
            double lost = 0.0;
            double q[32];
            for (std::size_t i = blk * kBlock; i < std::min(np, (blk + 1) * kBlock); ++i) {
                const Vec& x = state.positions[i];
                const Vec& v = state.velocities[i];
                AxisStencil st[3];
                double inside = 1.0;
                for (int a = 0; a < n; ++a) {
                    st[a] = axis_stencil((x[a] - grid.lo[a]) / grid.spacing(a), opt.bandwidth, grid.nodes[a]);
                    inside *= st[a].inside;
                }
                lost += state.weight * (1.0 - inside);
                // Per-particle quantities.
                const double w = state.weight;
                q[0] = w;
                for (int a = 0; a < n; ++a) q[o_j + a] = w * v[a];
                for (int a = 0; a < n; ++a)
                    for (int b = a; b < n; ++b) q[o_s + sym_index(a, b, n)] = w * v[a] * v[b];
                for (int a = 0; a < n; ++a)
                    for (int b = a; b < n; ++b)
                        for (int c = b; c < n; ++c) q[o_t + triple_index(a, b, c, n)] = w * v[a] * v[b] * v[c];
                if (fric) {
                    const double sp = norm(v);
                    const double pk = std::pow(sp, *opt.friction_exponent);
                    for (int a = 0; a < n; ++a) q[o_q + a] = w * pk * v[a];
                    for (int a = 0; a < n; ++a)
                        for (int b = a; b < n; ++b) q[o_fs + sym_index(a, b, n)] = w * pk * v[a] * v[b];
                }
                const int c1 = n > 1 ? st[1].count : 1;
                const int c2 = n > 2 ? st[2].count : 1;
                for (int k2 = 0; k2 < c2; ++k2) {
                    const long m2 = n > 2 ? st[2].first + k2 : 0;
                    if (m2 < 0 || (n > 2 && m2 >= static_cast<long>(grid.nodes[2]))) continue;
                    const double w2 = n > 2 ? st[2].w[k2] : 1.0;
                    for (int k1 = 0; k1 < c1; ++k1) {
                        const long m1 = n > 1 ? st[1].first + k1 : 0;
                        if (m1 < 0 || (n > 1 && m1 >= static_cast<long>(grid.nodes[1]))) continue;
                        const double w12 = w2 * (n > 1 ? st[1].w[k1] : 1.0);
                        for (int k0 = 0; k0 < st[0].count; ++k0) {
                            const long m0 = st[0].first + k0;
                            if (m0 < 0 || m0 >= static_cast<long>(grid.nodes[0])) continue;
                            const double wt = w12 * st[0].w[k0] * inv_vol;
                            const Index idx{static_cast<std::size_t>(m0), static_cast<std::size_t>(m1),
                                            static_cast<std::size_t>(m2)};
                            double* dst = buf.data() + grid.flatten(idx) * comps;
                            for (std::size_t c = 0; c < comps; ++c) dst[c] += wt * q[c];
                        }
                    }
                }
            }
            escaped[blk] = lost;
        }
    }, 1);

    std::vector<double> total(nodes * comps, 0.0);
    double lost = 0.0;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t p = 0; p < total.size(); ++p) total[p] += buffers[blk][p];
        lost += escaped[blk];
    }

    MomentFields m;
    m.grid = grid;
    m.time = state.time;
    m.escaped_mass = lost;
    m.rho = Field(nodes, 1);
    m.current = Field(nodes, n);
    m.stress = Field(nodes, ns);
    m.stress_flux = Field(nodes, nt);
    m.energy = Field(nodes, 1);
    m.energy_kinetic = Field(nodes, 1);
    m.energy_internal = Field(nodes, 1);
    m.energy_flux = Field(nodes, n);
    if (fric) {
        m.friction_current = Field(nodes, n);
        m.friction_stress = Field(nodes, ns);
    }
    for (std::size_t p = 0; p < nodes; ++p) {
        const double* src = total.data() + p * comps;
        m.rho(p) = src[0];
        for (int a = 0; a < n; ++a) m.current(p, a) = src[o_j + a];
        for (std::size_t c = 0; c < ns; ++c) m.stress(p, c) = src[o_s + c];
        for (std::size_t c = 0; c < nt; ++c) m.stress_flux(p, c) = src[o_t + c];
        if (fric) {
            for (int a = 0; a < n; ++a) (*m.friction_current)(p, a) = src[o_q + a];
            for (std::size_t c = 0; c < ns; ++c) (*m.friction_stress)(p, c) = src[o_fs + c];
        }
        double tr = 0.0;
        for (int a = 0; a < n; ++a) tr += m.stress(p, sym_index(a, a, n));
        const double e = 0.5 * tr;
        m.energy(p) = e;
        double j2 = 0.0;
        for (int a = 0; a < n; ++a) j2 += m.current(p, a) * m.current(p, a);
        const double ek = m.rho(p) > 0.0 ? std::min(0.5 * j2 / m.rho(p), e) : 0.0;
        m.energy_kinetic(p) = ek;
        m.energy_internal(p) = e - ek;
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int b = 0; b < n; ++b) s += m.stress_flux(p, triple_index(a, b, b, n));
            m.energy_flux(p, a) = 0.5 * s;
        }
    }
    return m;
}

MomentFields empirical_moments(const ParticleEnsemble& state, const GridSpec& grid, double bandwidth) {
    DepositionOptions o;
    o.bandwidth = bandwidth;
    return empirical_moments(state, grid, o);
}

Field velocity_on_support(const MomentFields& m, double rho_floor) {
    const std::size_t nodes = m.rho.node_count();
    Field u(nodes, m.current.components);
    for (std::size_t p = 0; p < nodes; ++p)
        if (m.rho(p) > rho_floor)
            for (std::size_t c = 0; c < u.components; ++c) u(p, c) = m.current(p, c) / m.rho(p);
    return u;
}

namespace {

void require_regular_pairs(const ParticleEnsemble& s, const KernelParams& p) {
    if (p.epsilon > 0.0) return;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i + 1; j < s.size(); ++j)
            if (s.positions[i] == s.positions[j])
                throw SingularityError("coincident particles with a singular kernel");
}

}  // namespace

double dissipation_rate(const ParticleEnsemble& state, const KernelParams& params) {
    state.validate();
    require_regular_pairs(state, params);
    const PowerKernel phi = PowerKernel::scaled(params);
    const std::size_t n = state.size();
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double r2 = norm_sq(state.positions[i] - state.positions[j]);
                row += phi(r2) * norm_sq(state.velocities[i] - state.velocities[j]);
            }
            rows[i] = row;
        }
    });
    const double w2 = state.weight * state.weight;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += w2 * rows[i];
    return total;
}

ConvolvedFields convolved_fields(const MomentFields& m, const KernelParams& params) {
    const ConvolutionWeights weights(m.grid, PowerKernel::scaled(params));
    return {weights.apply(m.rho), weights.apply(m.current)};
}

Field commutator_field(const MomentFields& m, const KernelParams& params) {
    const ConvolvedFields cf = convolved_fields(m, params);
    const std::size_t nodes = m.rho.node_count();
    Field out(nodes, m.current.components);
    for (std::size_t p = 0; p < nodes; ++p)
        for (std::size_t c = 0; c < out.components; ++c)
            out(p, c) = cf.phi_conv_j(p, c) * m.rho(p) - cf.phi_conv_rho(p) * m.current(p, c);
    return out;
}

namespace {

std::vector<Vec> evaluate_test(const ParticleEnsemble& s, const VectorTestFunction& g) {
    std::vector<Vec> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = g.value(s.time, s.positions[i]);
    return out;
}

}  // namespace

double weak_commutator_form(const ParticleEnsemble& state, const VectorTestFunction& g, const KernelParams& params) {
    state.validate();
    require_regular_pairs(state, params);
    const PowerKernel phi = PowerKernel::scaled(params);
    const auto gv = evaluate_test(state, g);
    const std::size_t n = state.size();
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double f = phi(norm_sq(state.positions[i] - state.positions[j]));
                row += f * dot(gv[i] - gv[j], state.velocities[j] - state.velocities[i]);
            }
            rows[i] = row;
        }
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return 0.5 * state.weight * state.weight * total;
}

double weak_commutator_form_unsymmetrized(const ParticleEnsemble& state, const VectorTestFunction& g,
                                          const KernelParams& params) {
    state.validate();
    require_regular_pairs(state, params);
    const PowerKernel phi = PowerKernel::scaled(params);
    const auto gv = evaluate_test(state, g);
    const std::size_t n = state.size();
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Vec acc{0.0, 0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double f = phi(norm_sq(state.positions[i] - state.positions[j]));
                acc = acc + f * (state.velocities[j] - state.velocities[i]);
            }
            rows[i] = dot(gv[i], acc);
        }
    });
    double total = 0.0;
    for (double r : rows) total += r;
    return state.weight * state.weight * total;
}

NearDiagonal near_diagonal(const ParticleEnsemble& state, double radius, const KernelParams& params) {
    PairStatistics ps = pair_statistics(state, params, {}, {radius});
    return ps.near.front();
}

double near_diagonal_mass(const ParticleEnsemble& state, double radius, const KernelParams& params) {
    return near_diagonal(state, radius, params).mass;
}

PairStatistics pair_statistics(const ParticleEnsemble& state, const KernelParams& params,
                               const std::vector<VectorTestFunction>& tests, const std::vector<double>& radii) {
    state.validate();
    for (double r : radii)
        if (!(r > 0.0)) throw DomainError("near-diagonal radius must be positive");
    require_regular_pairs(state, params);
    const PowerKernel phi = PowerKernel::scaled(params);
    const std::size_t n = state.size();
    const std::size_t nr = radii.size();
    std::vector<double> r2s(nr);
    for (std::size_t k = 0; k < nr; ++k) r2s[k] = radii[k] * radii[k];

    // |v|^(k-2) v for k = 1, 3.
    std::vector<Vec> u1(n), u3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = norm(state.velocities[i]);
        u1[i] = s > 0.0 ? (1.0 / s) * state.velocities[i] : Vec{0.0, 0.0, 0.0};
        u3[i] = s * state.velocities[i];
    }

    struct Row {
        double diss = 0.0, p1 = 0.0, p3 = 0.0;
        Vec align{0.0, 0.0, 0.0};
    };
    std::vector<Row> rows(n);
    std::vector<double> near_mass(n * nr, 0.0), near_weighted(n * nr, 0.0);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Row row;
            double* nm = near_mass.data() + i * nr;
            double* nw = near_weighted.data() + i * nr;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double r2 = norm_sq(state.positions[i] - state.positions[j]);
                const double f = phi(r2);
                const Vec dv = state.velocities[i] - state.velocities[j];
                row.diss += f * norm_sq(dv);
                row.p1 += f * dot(u1[i] - u1[j], dv);
                row.p3 += f * dot(u3[i] - u3[j], dv);
                row.align = row.align - f * dv;
                if (nr > 0) {
                    const double dvn = norm(dv);
                    const double sf = std::sqrt(f);
                    for (std::size_t k = 0; k < nr; ++k) {
                        if (r2 < r2s[k]) {
                            nm[k] += dvn;
                            nw[k] += sf * dvn;
                        }
                    }
                }
            }
            rows[i] = row;
        }
    });

    const double w = state.weight, w2 = w * w;
    PairStatistics out;
    out.weak_forms.assign(tests.size(), 0.0);
    out.near.assign(nr, NearDiagonal{});
    double diss = 0.0, p1 = 0.0, p3 = 0.0, tv = 0.0;
    std::vector<std::vector<Vec>> gv;
    for (const auto& g : tests) gv.push_back(evaluate_test(state, g));
    for (std::size_t i = 0; i < n; ++i) {
        diss += rows[i].diss;
        p1 += rows[i].p1;
        p3 += rows[i].p3;
        tv += norm(rows[i].align);
        for (std::size_t t = 0; t < tests.size(); ++t) out.weak_forms[t] += dot(gv[t][i], rows[i].align);
        for (std::size_t k = 0; k < nr; ++k) {
            out.near[k].mass += near_mass[i * nr + k];
            out.near[k].weighted += near_weighted[i * nr + k];
        }
    }
    out.dissipation = w2 * diss;
    out.pairing[0] = 0.5 * w2 * p1;
    out.pairing[1] = w2 * diss;
    out.pairing[2] = 1.5 * w2 * p3;
    out.commutator_tv = w2 * tv;
    for (double& v : out.weak_forms) v *= w2;
    const double c = params.c();
    for (std::size_t k = 0; k < nr; ++k) {
        out.near[k].mass *= w2;
        out.near[k].weighted *= w2;
        out.near[k].majorant =
            std::pow(params.epsilon * params.epsilon + c * r2s[k], 0.5 * params.lambda) * out.near[k].weighted;
    }
    return out;
}

BalanceCoefficients balance_coefficients(const ScalingSpec& s) {
    const double eps = s.epsilon;
    const double g = s.effective_gamma();
    BalanceCoefficients b;
    switch (s.kind) {
        case ScalingKind::hyperbolic:
            b = {1.0, eps, eps, 1.0, 1.0, true, false, 0.0};
            break;
        case ScalingKind::intermediate:
            b = {std::pow(eps, -g), std::pow(eps, 1.0 + g), eps, std::pow(eps, g), std::pow(eps, 2.0 * g), true, false, 0.0};
            break;
        case ScalingKind::frictionless:
            b = {1.0, eps, eps, eps, eps, false, false, 0.0};
            break;
        case ScalingKind::generalized_friction:
            b = {std::pow(eps, -g), std::pow(eps, 1.0 + g), eps, std::pow(eps, g), std::pow(eps, 2.0 * g), false, true,
                 s.alpha_law(eps)};
            break;
    }
    return b;
}

BalanceReport balance_residuals(const std::vector<MomentFields>& series, const ScalingSpec& scaling,
                                const PotentialSpec& potential) {
    if (series.size() < 3) throw InsufficientSeriesError("balance residuals need at least 3 time levels");
    const GridSpec& grid = series.front().grid;
    const int n = grid.dim;
    const std::size_t nodes = grid.size();
    const std::size_t ns = sym_count(n);
    const BalanceCoefficients k = balance_coefficients(scaling);
    if (k.generalized_friction && (!series.front().friction_current || !series.front().friction_stress))
        throw ConfigError("generalized friction residuals need friction deposits");
    const KernelParams kp{scaling.lambda, scaling.epsilon, n};
    const ConvolutionWeights weights(grid, PowerKernel::scaled(kp));
    const double vol = grid.cell_volume();

    auto interior = [&](std::size_t p) {
        const Index idx = grid.unflatten(p);
        for (int a = 0; a < n; ++a)
            if (idx[a] == 0 || idx[a] + 1 == grid.nodes[a]) return false;
        return true;
    };

    BalanceReport rep;
    rep.scaling = to_string(scaling.kind);
    for (std::size_t m = 1; m + 1 < series.size(); ++m) {
        const MomentFields& prev = series[m - 1];
        const MomentFields& cur = series[m];
        const MomentFields& next = series[m + 1];
        const double dt2 = next.time - prev.time;
        if (!(dt2 > 0.0)) throw InsufficientSeriesError("time levels must increase");
        const double wt = 0.5 * dt2;

        const Field crho = weights.apply(cur.rho);
        const Field cj = weights.apply(cur.current);

        // Divergences.
        Field div_j(nodes, 1), div_s(nodes, n), div_t(nodes, ns), div_q(nodes, 1);
        for (int a = 0; a < n; ++a) {
            const Field d = partial_derivative(grid, cur.current, a, a);
            for (std::size_t p = 0; p < nodes; ++p) div_j(p) += d(p);
            const Field dq = partial_derivative(grid, cur.energy_flux, a, a);
            for (std::size_t p = 0; p < nodes; ++p) div_q(p) += dq(p);
            for (int b = 0; b < n; ++b) {
                const Field ds = partial_derivative(grid, cur.stress, sym_index(a, b, n), b);
                for (std::size_t p = 0; p < nodes; ++p) div_s(p, a) += ds(p);
            }
        }
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b)
                for (int c = 0; c < n; ++c) {
                    const Field dt = partial_derivative(grid, cur.stress_flux, triple_index(a, b, c, n), c);
                    for (std::size_t p = 0; p < nodes; ++p) div_t(p, sym_index(a, b, n)) += dt(p);
                }

        for (std::size_t p = 0; p < nodes; ++p) {
            if (!interior(p)) continue;
            const Vec grad = potential_gradient(potential, cur.time, grid.coordinate(p));
            const double rho = cur.rho(p);

            // Mass.
            const double rm = (next.rho(p) - prev.rho(p)) / dt2 + k.mass_flux * div_j(p);

            // Current.
            double rc2 = 0.0;
            Vec fr_j{0.0, 0.0, 0.0};
            for (int a = 0; a < n; ++a) {
                if (k.linear_friction)
                    fr_j[a] = cur.current(p, a);
                else if (k.generalized_friction)
                    fr_j[a] = (*cur.friction_current)(p, a) - k.alpha * cur.current(p, a);
                const double r = k.time * (next.current(p, a) - prev.current(p, a)) / dt2 + k.transport * div_s(p, a) +
                                 k.force * rho * grad[a] + fr_j[a] + crho(p) * cur.current(p, a) - cj(p, a) * rho;
                rc2 += r * r;
            }

            // Stress.
            double rs2 = 0.0;
            double fr_e = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) {
                    const std::size_t s = sym_index(a, b, n);
                    double fr_s = 0.0;
                    if (k.linear_friction)
                        fr_s = cur.stress(p, s);
                    else if (k.generalized_friction)
                        fr_s = (*cur.friction_stress)(p, s) - k.alpha * cur.stress(p, s);
                    if (a == b) fr_e += 0.5 * fr_s;
                    const double sym_jpsi = cur.current(p, a) * grad[b] + cur.current(p, b) * grad[a];
                    const double sym_cj = cj(p, a) * cur.current(p, b) + cj(p, b) * cur.current(p, a);
                    const double r = k.time * (next.stress(p, s) - prev.stress(p, s)) / dt2 + k.transport * div_t(p, s) +
                                     k.force * sym_jpsi +
                                     2.0 * (fr_s + crho(p) * cur.stress(p, s) - (a == b ? k.diffusion * rho : 0.0)) -
                                     sym_cj;
                    rs2 += (a == b ? 1.0 : 2.0) * r * r;
                }

            // Energy.
            double jpsi = 0.0, cjj = 0.0;
            for (int a = 0; a < n; ++a) {
                jpsi += cur.current(p, a) * grad[a];
                cjj += cj(p, a) * cur.current(p, a);
            }
            const double re = k.time * (next.energy(p) - prev.energy(p)) / dt2 + k.transport * div_q(p) + k.force * jpsi +
                              2.0 * (fr_e + crho(p) * cur.energy(p) - 0.5 * n * k.diffusion * rho) - cjj;

            const double vals[4] = {std::fabs(rm), std::sqrt(rc2), std::sqrt(rs2), std::fabs(re)};
            ResidualNorms* norms[4] = {&rep.mass, &rep.current, &rep.stress, &rep.energy};
            for (int q = 0; q < 4; ++q) {
                norms[q]->sup = std::max(norms[q]->sup, vals[q]);
                norms[q]->l1 += vals[q] * vol * wt;
            }
        }
        ++rep.levels_checked;
    }
    return rep;
}

std::vector<GlobalMoments> global_moment_series(const std::vector<ParticleEnsemble>& trajectory, int k) {
    if (k < 0) throw DomainError("moment order must be >= 0");
    std::vector<GlobalMoments> out;
    out.reserve(trajectory.size());
    for (const auto& s : trajectory) {
        GlobalMoments g;
        g.time = s.time;
        if (k == 0) {
            g.velocity = g.position = s.total_mass();
        } else {
            for (std::size_t i = 0; i < s.size(); ++i) {
                g.velocity += s.weight * std::pow(norm(s.velocities[i]), k);
                g.position += s.weight * std::pow(norm(s.positions[i]), k);
            }
        }
        out.push_back(g);
    }
    return out;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw DomainError("trapezoid needs equal-length series");
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

}  // namespace cslab
