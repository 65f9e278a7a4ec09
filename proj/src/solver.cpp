#include "fsp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fsp/spectral.hpp"

namespace fsp {
namespace {

// Gauss-Jordan inverse with partial pivoting for small dense matrices.
std::vector<double> invert_dense(std::vector<double> a, int n) {
    std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double cand = std::abs(a[static_cast<size_t>(r) * n + col]);
            if (cand > best) {
                best = cand;
                pivot = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("singular face mass matrix");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a[static_cast<size_t>(col) * n + j], a[static_cast<size_t>(pivot) * n + j]);
                std::swap(inv[static_cast<size_t>(col) * n + j],
                          inv[static_cast<size_t>(pivot) * n + j]);
            }
        }
        const double d = a[static_cast<size_t>(col) * n + col];
        for (int j = 0; j < n; ++j) {
            a[static_cast<size_t>(col) * n + j] /= d;
            inv[static_cast<size_t>(col) * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<size_t>(r) * n + col];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[static_cast<size_t>(r) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
                inv[static_cast<size_t>(r) * n + j] -= f * inv[static_cast<size_t>(col) * n + j];
            }
        }
    }
    return inv;
}

// C = A * B for row-major (n x n) matrices.
std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, int n) {
    std::vector<double> c(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double aik = a[static_cast<size_t>(i) * n + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j)
                c[static_cast<size_t>(i) * n + j] += aik * b[static_cast<size_t>(k) * n + j];
        }
    return c;
}

State5 state_at(const std::array<Grid3, 5>& u, size_t flat) {
    return {u[0].v[flat], u[1].v[flat], u[2].v[flat], u[3].v[flat], u[4].v[flat]};
}

State5 state_at2(const std::array<Grid2, 5>& u, size_t flat) {
    return {u[0].v[flat], u[1].v[flat], u[2].v[flat], u[3].v[flat], u[4].v[flat]};
}

// Grid index of a face node (p,q) with index jn along the normal axis.
size_t volume_index(const Grid3& g, int axis, int jn, int p, int q) {
    switch (axis) {
        case 0: return g.idx(jn, p, q);
        case 1: return g.idx(p, jn, q);
        default: return g.idx(p, q, jn);
    }
}

struct QuadFaceData {
    std::array<Grid2, 5> u;       // state trace
    std::array<Grid2, 5> fn_int;  // internal normal flux trace, outward oriented
};

std::array<std::array<Grid3, 5>, 3> contravariant_flux_raw(
    const std::array<Grid3, 5>& u, const std::array<std::array<Grid3, 3>, 3>& ja) {
    std::array<std::array<Grid3, 5>, 3> ft;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 5; ++c) ft[i][c] = Grid3(u[0].n[0], u[0].n[1], u[0].n[2]);
    for (size_t a = 0; a < u[0].size(); ++a) {
        const auto f = euler_physical_flux(state_at(u, a));
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < 5; ++c) {
                double s = 0.0;
                for (int n = 0; n < 3; ++n) s += ja[i][n].v[a] * f[n][c];
                ft[i][c].v[a] = s;
            }
    }
    return ft;
}

}  // namespace

State5 conservative_state(const EulerPrimitive& prim) {
    const double ke = 0.5 * prim.rho * (prim.v1 * prim.v1 + prim.v2 * prim.v2 + prim.v3 * prim.v3);
    return {prim.rho, prim.rho * prim.v1, prim.rho * prim.v2, prim.rho * prim.v3,
            prim.p / (kGamma - 1.0) + ke};
}

double pressure(const State5& u) {
    const double ke = 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / u[0];
    return (kGamma - 1.0) * (u[4] - ke);
}

double sound_speed(const State5& u) { return std::sqrt(kGamma * pressure(u) / u[0]); }

std::array<State5, 3> euler_physical_flux(const State5& u) {
    const double rho = u[0];
    const Vec3 v{u[1] / rho, u[2] / rho, u[3] / rho};
    const double p = pressure(u);
    std::array<State5, 3> f{};
    for (int i = 0; i < 3; ++i) {
        f[i][0] = u[1 + i];
        for (int j = 0; j < 3; ++j) f[i][1 + j] = u[1 + i] * v[j];
        f[i][1 + i] += p;
        f[i][4] = v[i] * (u[4] + p);
    }
    return f;
}

State5 lax_friedrichs_numerical_flux(const State5& ul, const State5& ur, const Vec3& normal) {
    const double nn = std::sqrt(dot(normal, normal));
    const auto fl = euler_physical_flux(ul);
    const auto fr = euler_physical_flux(ur);
    double lambda = 0.0;
    if (nn > 0.0) {
        const Vec3 nhat{normal[0] / nn, normal[1] / nn, normal[2] / nn};
        const double sl =
            std::abs((ul[1] * nhat[0] + ul[2] * nhat[1] + ul[3] * nhat[2]) / ul[0]) +
            sound_speed(ul);
        const double sr =
            std::abs((ur[1] * nhat[0] + ur[2] * nhat[1] + ur[3] * nhat[2]) / ur[0]) +
            sound_speed(ur);
        lambda = std::max(sl, sr);
    }
    State5 out{};
    for (int c = 0; c < 5; ++c) {
        double central = 0.0;
        for (int i = 0; i < 3; ++i) central += 0.5 * (fl[i][c] + fr[i][c]) * normal[i];
        out[c] = central - 0.5 * lambda * nn * (ur[c] - ul[c]);
    }
    return out;
}

std::array<std::array<Grid3, 5>, 3> contravariant_volume_flux(const ElementState& u,
                                                              const MetricSet& ms) {
    return contravariant_flux_raw(u.comp, ms.ja);
}

std::array<Grid3, 5> strong_divergence(const std::array<std::array<Grid3, 5>, 3>& flux,
                                       const DiffMatrix& d) {
    std::array<Grid3, 5> out;
    for (int c = 0; c < 5; ++c) {
        out[c] = apply_diff(flux[0][c], d, 0);
        const Grid3 t1 = apply_diff(flux[1][c], d, 1);
        const Grid3 t2 = apply_diff(flux[2][c], d, 2);
        for (size_t a = 0; a < out[c].size(); ++a) out[c].v[a] += t1.v[a] + t2.v[a];
    }
    return out;
}

std::array<Grid3, 5> flux_difference_volume(const ElementState& u, const MetricSet& ms,
                                            const NodeSet& ns) {
    const int n1 = ns.size();
    const DiffMatrix d = differentiation_matrix(ns);
    // Nodal physical fluxes, reused by every two-point pairing.
    std::array<std::array<Grid3, 5>, 3> f;
    for (int n = 0; n < 3; ++n)
        for (int c = 0; c < 5; ++c) f[n][c] = Grid3(n1, n1, n1);
    for (size_t a = 0; a < u.comp[0].size(); ++a) {
        const auto fa = euler_physical_flux(state_at(u.comp, a));
        for (int n = 0; n < 3; ++n)
            for (int c = 0; c < 5; ++c) f[n][c].v[a] = fa[n][c];
    }
    std::array<Grid3, 5> out;
    for (int c = 0; c < 5; ++c) out[c] = Grid3(n1, n1, n1);
    for (int axis = 0; axis < 3; ++axis) {
        for (int j = 0; j < n1; ++j)
            for (int k = 0; k < n1; ++k)
                for (int l = 0; l < n1; ++l) {
                    const std::array<int, 3> here{j, k, l};
                    const size_t ia = Grid3(n1, n1, n1).idx(j, k, l);
                    const int jaxis = here[axis];
                    for (int m = 0; m < n1; ++m) {
                        std::array<int, 3> other = here;
                        other[axis] = m;
                        const size_t ib =
                            Grid3(n1, n1, n1).idx(other[0], other[1], other[2]);
                        const double w = 2.0 * d(jaxis, m);
                        for (int c = 0; c < 5; ++c) {
                            double s = 0.0;
                            for (int n = 0; n < 3; ++n) {
                                const double favg = 0.5 * (f[n][c].v[ia] + f[n][c].v[ib]);
                                const double javg =
                                    0.5 * (ms.ja[axis][n].v[ia] + ms.ja[axis][n].v[ib]);
                                s += favg * javg;
                            }
                            out[c].v[ia] += w * s;
                        }
                    }
                }
    }
    return out;
}

SolverContext make_solver_context(const Mesh& mesh, const SolverConfig& cfg) {
    SolverContext ctx;
    ctx.mesh = &mesh;
    ctx.cfg = cfg;
    ctx.ns = build_node_set(cfg.node_kind, cfg.N);
    ctx.metrics = build_metrics(mesh, ctx.ns, cfg.strategy, cfg.M);

    const bool over = cfg.strategy == MetricStrategy::overintegrated;
    const int face_interp = over ? ctx.metrics.front().build_degree : -1;
    ctx.mortar_parent_fm.reserve(mesh.mortars.size());
    ctx.mortar_child_fm.reserve(mesh.mortars.size());
    for (const MortarFace& mortar : mesh.mortars) {
        const FacePatch& pf = element_face(mesh, mortar.parent_elem, mortar.parent_side);
        const int axis = face_axis(mortar.parent_side);
        FaceMetric parent = face_metrics_parent(pf, ctx.ns, axis, face_interp);
        std::array<FaceMetric, 4> kids;
        for (int q = 0; q < 4; ++q)
            kids[q] =
                restrict_face_metric(parent, mortar.children[q].submap, mortar.children[q].beta);
        ctx.mortar_parent_fm.push_back(std::move(parent));
        ctx.mortar_child_fm.push_back(std::move(kids));
    }

    if (over) {
        ctx.quad = build_node_set(NodeKind::lobatto, ctx.metrics.front().build_degree);
        ctx.same_grid = false;
        ctx.to_quad = interpolation_matrix(ctx.ns, ctx.quad.nodes);
    } else {
        ctx.quad = ctx.ns;
        ctx.same_grid = true;
    }

    // Half-interval coupling operators on the quadrature grid. With r the
    // parent face parameter and t the child parameter, r = (t -+ 1)/2.
    const int q1 = ctx.quad.size();
    const NodeSet gq = build_node_set(NodeKind::gauss, ctx.quad.degree);
    const std::vector<double> basis_at_gauss = interpolation_matrix(ctx.quad, gq.nodes);
    std::vector<double> mass(static_cast<size_t>(q1) * q1, 0.0);
    for (int i = 0; i < q1; ++i)
        for (int j = 0; j < q1; ++j) {
            double s = 0.0;
            for (int g = 0; g < q1; ++g)
                s += gq.weights[g] * basis_at_gauss[static_cast<size_t>(g) * q1 + i] *
                     basis_at_gauss[static_cast<size_t>(g) * q1 + j];
            mass[static_cast<size_t>(i) * q1 + j] = s;
        }
    const std::vector<double> mass_inv = invert_dense(mass, q1);
    for (int h = 0; h < 2; ++h) {
        const double offset = h == 0 ? -0.5 : 0.5;
        std::vector<double> targets(q1);
        for (int j = 0; j < q1; ++j) targets[j] = 0.5 * ctx.quad.nodes[j] + offset;
        ctx.restrict_half[h] = interpolation_matrix(ctx.quad, targets);

        std::vector<double> mapped(q1);
        for (int g = 0; g < q1; ++g) mapped[g] = 0.5 * gq.nodes[g] + offset;
        const std::vector<double> basis_at_mapped = interpolation_matrix(ctx.quad, mapped);
        std::vector<double> gh(static_cast<size_t>(q1) * q1, 0.0);
        for (int i = 0; i < q1; ++i)
            for (int j = 0; j < q1; ++j) {
                double s = 0.0;
                for (int g = 0; g < q1; ++g)
                    s += gq.weights[g] * basis_at_mapped[static_cast<size_t>(g) * q1 + i] *
                         basis_at_gauss[static_cast<size_t>(g) * q1 + j];
                gh[static_cast<size_t>(i) * q1 + j] = s;
            }
        ctx.project_half[h] = matmul(mass_inv, gh, q1);
    }
    return ctx;
}

MeshState constant_state(const SolverContext& ctx, const EulerPrimitive& prim) {
    const int n1 = ctx.ns.size();
    const State5 u = conservative_state(prim);
    MeshState states(ctx.mesh->elements.size());
    for (auto& es : states)
        for (int c = 0; c < 5; ++c) {
            es.comp[c] = Grid3(n1, n1, n1);
            std::fill(es.comp[c].v.begin(), es.comp[c].v.end(), u[c]);
        }
    return states;
}

namespace {

// State and outward internal normal flux traces of one element side on the
// quadrature grid.
QuadFaceData quad_face_data(const SolverContext& ctx, const std::array<Grid3, 5>& uq,
                            const std::array<std::array<Grid3, 5>, 3>& ft, int side) {
    const int axis = face_axis(side);
    const int sign = face_sign(side);
    const std::vector<double> bv = boundary_interpolation_vector(ctx.quad, sign);
    QuadFaceData out;
    for (int c = 0; c < 5; ++c) {
        out.u[c] = face_trace(uq[c], bv, axis);
        out.fn_int[c] = face_trace(ft[axis][c], bv, axis);
        for (double& x : out.fn_int[c].v) x *= sign;
    }
    return out;
}

// Metric trace of the left element on a conforming face (shared normal).
std::array<Grid2, 3> conforming_shared_normal(const SolverContext& ctx, const ConformingFace& cf) {
    std::array<Grid2, 3> fm;
    for (int n = 0; n < 3; ++n)
        fm[n] = ctx.same_grid
                    ? metric_face_trace(ctx.metrics[cf.left_elem], ctx.ns, cf.left_side, n)
                    : metric_face_trace_build(ctx.metrics[cf.left_elem], cf.left_side, n);
    return fm;
}

std::array<Grid3, 5> state_on_quad(const SolverContext& ctx, const ElementState& es) {
    if (ctx.same_grid) return es.comp;
    const int q1 = ctx.quad.size();
    std::array<Grid3, 5> out;
    for (int c = 0; c < 5; ++c) {
        Grid3 g = apply_matrix(es.comp[c], ctx.to_quad, q1, 0);
        g = apply_matrix(g, ctx.to_quad, q1, 1);
        out[c] = apply_matrix(g, ctx.to_quad, q1, 2);
    }
    return out;
}

Grid2 project_child_patch(const SolverContext& ctx, const Grid2& child, int hr, int hs) {
    const int q1 = ctx.quad.size();
    Grid2 g = apply_matrix2(child, ctx.project_half[hr], q1, 0);
    return apply_matrix2(g, ctx.project_half[hs], q1, 1);
}

Grid2 restrict_parent_patch(const SolverContext& ctx, const Grid2& parent, int hr, int hs) {
    const int q1 = ctx.quad.size();
    Grid2 g = apply_matrix2(parent, ctx.restrict_half[hr], q1, 0);
    return apply_matrix2(g, ctx.restrict_half[hs], q1, 1);
}

MortarFluxes compute_mortar_fluxes(const SolverContext& ctx, const MortarFace& mortar,
                                   const QuadFaceData& parent,
                                   const std::array<QuadFaceData, 4>& child_tr, int mortar_index) {
    MortarFluxes out;
    const int q1 = ctx.quad.size();
    const int sc = face_sign(mortar.children[0].side);
    for (int c = 0; c < 5; ++c) out.parent[c] = Grid2(q1, q1);
    for (int q = 0; q < 4; ++q) {
        const MortarChild& mc = mortar.children[q];
        const int hr = mc.submap.offset[0] > 0.0 ? 1 : 0;
        const int hs = mc.submap.offset[1] > 0.0 ? 1 : 0;
        std::array<Grid2, 5> up;
        for (int c = 0; c < 5; ++c) up[c] = restrict_parent_patch(ctx, parent.u[c], hr, hs);
        const auto& fm = ctx.mortar_child_fm[mortar_index][q];
        const auto& jan = ctx.same_grid ? fm.jan : fm.jan_build;
        for (int c = 0; c < 5; ++c) out.child[q][c] = Grid2(q1, q1);
        for (size_t a = 0; a < jan[0].size(); ++a) {
            const Vec3 n_out{sc * jan[0].v[a], sc * jan[1].v[a], sc * jan[2].v[a]};
            const State5 flux =
                lax_friedrichs_numerical_flux(state_at2(child_tr[q].u, a), state_at2(up, a), n_out);
            for (int c = 0; c < 5; ++c) out.child[q][c].v[a] = flux[c];
        }
        // Parent side consumes the L2 projection of the child patches,
        // rescaled to parent face metric scale and flipped to the parent's
        // outward orientation.
        const double factor = -1.0 / (4.0 * mc.beta);
        for (int c = 0; c < 5; ++c) {
            const Grid2 proj = project_child_patch(ctx, out.child[q][c], hr, hs);
            for (size_t a = 0; a < proj.size(); ++a) out.parent[c].v[a] += factor * proj.v[a];
        }
    }
    return out;
}

}  // namespace

MortarFluxes mortar_surface_exchange(const SolverContext& ctx, int mortar_index,
                                     const MeshState& states) {
    const MortarFace& mortar = ctx.mesh->mortars[static_cast<size_t>(mortar_index)];
    const auto traces = [&](int elem, int side) {
        const std::array<Grid3, 5> uq = state_on_quad(ctx, states[static_cast<size_t>(elem)]);
        const MetricSet& ms = ctx.metrics[static_cast<size_t>(elem)];
        const auto ft = contravariant_flux_raw(uq, ctx.same_grid ? ms.ja : ms.ja_build);
        return quad_face_data(ctx, uq, ft, side);
    };
    const QuadFaceData parent = traces(mortar.parent_elem, mortar.parent_side);
    std::array<QuadFaceData, 4> child_tr;
    for (int q = 0; q < 4; ++q)
        child_tr[q] = traces(mortar.children[q].elem, mortar.children[q].side);
    return compute_mortar_fluxes(ctx, mortar, parent, child_tr, mortar_index);
}

MeshState semidiscrete_rhs(const SolverContext& ctx, const MeshState& states) {
    const Mesh& mesh = *ctx.mesh;
    const size_t nelem = mesh.elements.size();
    const int n1 = ctx.ns.size();
    const int q1 = ctx.quad.size();
    const DiffMatrix dq = differentiation_matrix(ctx.quad);

    std::vector<double> to_sol;  // transpose of to_quad, (n1 x q1)
    if (!ctx.same_grid) {
        to_sol.assign(static_cast<size_t>(n1) * q1, 0.0);
        for (int g = 0; g < q1; ++g)
            for (int j = 0; j < n1; ++j)
                to_sol[static_cast<size_t>(j) * q1 + g] = ctx.to_quad[static_cast<size_t>(g) * n1 + j];
    }
    const auto weight_to_solution2 = [&](const Grid2& diff) {
        Grid2 w(q1, q1);
        for (int p = 0; p < q1; ++p)
            for (int q = 0; q < q1; ++q)
                w(p, q) = diff(p, q) * ctx.quad.weights[p] * ctx.quad.weights[q];
        if (ctx.same_grid) return w;
        Grid2 a = apply_matrix2(w, to_sol, n1, 0);
        return apply_matrix2(a, to_sol, n1, 1);
    };

    // Quadrature-grid states and contravariant fluxes.
    std::vector<std::array<Grid3, 5>> uq(nelem);
    std::vector<std::array<std::array<Grid3, 5>, 3>> ft(nelem);
    std::vector<std::array<std::array<Grid2, 5>, 6>> face_u(nelem);
    std::vector<std::array<std::array<Grid2, 5>, 6>> face_fn(nelem);
    for (size_t e = 0; e < nelem; ++e) {
        uq[e] = state_on_quad(ctx, states[e]);
        const MetricSet& ms = ctx.metrics[e];
        ft[e] = contravariant_flux_raw(uq[e], ctx.same_grid ? ms.ja : ms.ja_build);
        for (int side = 1; side <= 6; ++side) {
            QuadFaceData fd = quad_face_data(ctx, uq[e], ft[e], side);
            face_u[e][side - 1] = std::move(fd.u);
            face_fn[e][side - 1] = std::move(fd.fn_int);
        }
    }

    // Projected residual on the solution grid: volume term first.
    std::vector<std::array<Grid3, 5>> res(nelem);
    for (size_t e = 0; e < nelem; ++e) {
        const std::array<Grid3, 5> div = strong_divergence(ft[e], dq);
        for (int c = 0; c < 5; ++c) {
            Grid3 w(q1, q1, q1);
            for (int j = 0; j < q1; ++j)
                for (int k = 0; k < q1; ++k)
                    for (int l = 0; l < q1; ++l)
                        w(j, k, l) = div[c](j, k, l) * ctx.quad.weights[j] *
                                     ctx.quad.weights[k] * ctx.quad.weights[l];
            if (ctx.same_grid) {
                res[e][c] = std::move(w);
            } else {
                Grid3 a = apply_matrix(w, to_sol, n1, 0);
                a = apply_matrix(a, to_sol, n1, 1);
                res[e][c] = apply_matrix(a, to_sol, n1, 2);
            }
        }
    }

    const auto lift_face = [&](int elem, int side, const std::array<Grid2, 5>& diff) {
        const int axis = face_axis(side);
        const int sign = face_sign(side);
        const std::vector<double> bsol = boundary_interpolation_vector(ctx.ns, sign);
        for (int c = 0; c < 5; ++c) {
            const Grid2 w = weight_to_solution2(diff[c]);
            Grid3& r = res[static_cast<size_t>(elem)][c];
            for (int jn = 0; jn < n1; ++jn) {
                const double coeff = bsol[jn];
                if (coeff == 0.0) continue;
                for (int p = 0; p < n1; ++p)
                    for (int q = 0; q < n1; ++q) r.v[volume_index(r, axis, jn, p, q)] += coeff * w(p, q);
            }
        }
    };

    // Conforming faces: one Riemann solve per face node, consumed with
    // opposite signs by the two sides.
    for (const ConformingFace& cf : mesh.conforming) {
        const int sl = face_sign(cf.left_side);
        const std::array<Grid2, 3> fm = conforming_shared_normal(ctx, cf);
        const auto& ul = face_u[static_cast<size_t>(cf.left_elem)][cf.left_side - 1];
        const auto& ur = face_u[static_cast<size_t>(cf.right_elem)][cf.right_side - 1];
        std::array<Grid2, 5> diff_l, diff_r;
        for (int c = 0; c < 5; ++c) {
            diff_l[c] = Grid2(q1, q1);
            diff_r[c] = Grid2(q1, q1);
        }
        for (size_t a = 0; a < fm[0].size(); ++a) {
            const Vec3 n_out{sl * fm[0].v[a], sl * fm[1].v[a], sl * fm[2].v[a]};
            const State5 flux =
                lax_friedrichs_numerical_flux(state_at2(ul, a), state_at2(ur, a), n_out);
            for (int c = 0; c < 5; ++c) {
                diff_l[c].v[a] =
                    flux[c] - face_fn[static_cast<size_t>(cf.left_elem)][cf.left_side - 1][c].v[a];
                diff_r[c].v[a] =
                    -flux[c] - face_fn[static_cast<size_t>(cf.right_elem)][cf.right_side - 1][c].v[a];
            }
        }
        lift_face(cf.left_elem, cf.left_side, diff_l);
        lift_face(cf.right_elem, cf.right_side, diff_r);
    }

    // Mortar faces: child-side Riemann solves against the restricted parent
    // trace; parent consumes the projected flux.
    for (size_t mi = 0; mi < mesh.mortars.size(); ++mi) {
        const MortarFace& mortar = mesh.mortars[mi];
        QuadFaceData parent;
        parent.u = face_u[static_cast<size_t>(mortar.parent_elem)][mortar.parent_side - 1];
        parent.fn_int = face_fn[static_cast<size_t>(mortar.parent_elem)][mortar.parent_side - 1];
        std::array<QuadFaceData, 4> child_tr;
        for (int q = 0; q < 4; ++q) {
            child_tr[q].u =
                face_u[static_cast<size_t>(mortar.children[q].elem)][mortar.children[q].side - 1];
            child_tr[q].fn_int =
                face_fn[static_cast<size_t>(mortar.children[q].elem)][mortar.children[q].side - 1];
        }
        const MortarFluxes fluxes =
            compute_mortar_fluxes(ctx, mortar, parent, child_tr, static_cast<int>(mi));
        for (int q = 0; q < 4; ++q) {
            std::array<Grid2, 5> diff;
            for (int c = 0; c < 5; ++c) {
                diff[c] = Grid2(q1, q1);
                for (size_t a = 0; a < diff[c].size(); ++a)
                    diff[c].v[a] = fluxes.child[q][c].v[a] - child_tr[q].fn_int[c].v[a];
            }
            lift_face(mortar.children[q].elem, mortar.children[q].side, diff);
        }
        std::array<Grid2, 5> diff_p;
        for (int c = 0; c < 5; ++c) {
            diff_p[c] = Grid2(q1, q1);
            for (size_t a = 0; a < diff_p[c].size(); ++a)
                diff_p[c].v[a] = fluxes.parent[c].v[a] - parent.fn_int[c].v[a];
        }
        lift_face(mortar.parent_elem, mortar.parent_side, diff_p);
    }

    // Mass inversion: nodal quadrature weights times the solution-grid J.
    MeshState out(nelem);
    for (size_t e = 0; e < nelem; ++e) {
        const Grid3& jac = ctx.metrics[e].jac;
        for (int c = 0; c < 5; ++c) {
            out[e].comp[c] = Grid3(n1, n1, n1);
            for (int j = 0; j < n1; ++j)
                for (int k = 0; k < n1; ++k)
                    for (int l = 0; l < n1; ++l)
                        out[e].comp[c](j, k, l) =
                            -res[e][c](j, k, l) / (ctx.ns.weights[j] * ctx.ns.weights[k] *
                                                   ctx.ns.weights[l] * jac(j, k, l));
        }
    }
    return out;
}

AdvanceResult rk_advance(const SolverContext& ctx, MeshState states, double final_time) {
    static const double kA[5] = {0.0, -567301805773.0 / 1357537059087.0,
                                 -2404267990393.0 / 2016746695238.0,
                                 -3550918686646.0 / 2091501179385.0,
                                 -1275806237668.0 / 842570457699.0};
    static const double kB[5] = {1432997174477.0 / 9575080441755.0,
                                 5161836677717.0 / 13612068292357.0,
                                 1720146321549.0 / 2090206949498.0,
                                 3134564353537.0 / 4481467310338.0,
                                 2277821191437.0 / 14882151754819.0};

    AdvanceResult result;
    const int n1 = ctx.ns.size();
    if (final_time <= 0.0) {
        result.states = std::move(states);
        return result;
    }

    // Frozen time step from the initial contravariant wave speeds.
    double min_dt = std::numeric_limits<double>::infinity();
    for (size_t e = 0; e < states.size(); ++e) {
        const MetricSet& ms = ctx.metrics[e];
        double lam = 0.0;
        for (size_t a = 0; a < ms.jac.size(); ++a) {
            const State5 u = state_at(states[e].comp, a);
            const Vec3 v{u[1] / u[0], u[2] / u[0], u[3] / u[0]};
            const double cs = sound_speed(u);
            double s = 0.0;
            for (int i = 0; i < 3; ++i) {
                const Vec3 jai{ms.ja[i][0].v[a], ms.ja[i][1].v[a], ms.ja[i][2].v[a]};
                s += std::abs(dot(v, jai)) + cs * std::sqrt(dot(jai, jai));
            }
            lam = std::max(lam, s / ms.jac.v[a]);
        }
        min_dt = std::min(min_dt, ctx.cfg.cfl * (2.0 / (2.0 * ctx.cfg.N + 1.0)) / lam);
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(final_time / min_dt - 1e-12)));
    const double dt = final_time / steps;
    result.dt = dt;

    const double rho_ref = ctx.cfg.freestream.rho;
    MeshState du(states.size());
    for (size_t e = 0; e < states.size(); ++e)
        for (int c = 0; c < 5; ++c) du[e].comp[c] = Grid3(n1, n1, n1);

    for (int step = 0; step < steps; ++step) {
        for (int s = 0; s < 5; ++s) {
            const MeshState rhs = semidiscrete_rhs(ctx, states);
            for (size_t e = 0; e < states.size(); ++e)
                for (int c = 0; c < 5; ++c)
                    for (size_t a = 0; a < du[e].comp[c].size(); ++a) {
                        du[e].comp[c].v[a] = kA[s] * du[e].comp[c].v[a] + dt * rhs[e].comp[c].v[a];
                        states[e].comp[c].v[a] += kB[s] * du[e].comp[c].v[a];
                    }
        }
        double dev = 0.0;
        for (size_t e = 0; e < states.size(); ++e)
            for (size_t a = 0; a < states[e].comp[0].size(); ++a) {
                const State5 u = state_at(states[e].comp, a);
                if (!std::isfinite(u[0]) || !std::isfinite(u[4]) || u[0] <= 0.0 ||
                    pressure(u) <= 0.0) {
                    char msg[96];
                    std::snprintf(msg, sizeof(msg), "solution blew up at step %d of %d", step + 1,
                                  steps);
                    throw BlowUpError(msg);
                }
                dev = std::max(dev, std::abs(u[0] - rho_ref));
            }
        result.max_density_dev = std::max(result.max_density_dev, dev);
    }
    result.states = std::move(states);
    result.steps = steps;
    return result;
}

}  // namespace fsp
