#include "fsp/metrics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace fsp {

std::string to_string(MetricStrategy s) {
    switch (s) {
        case MetricStrategy::cross_product: return "cross_product";
        case MetricStrategy::curl_form: return "curl_form";
        case MetricStrategy::parent_inherited: return "parent_inherited";
        case MetricStrategy::overintegrated: return "overintegrated";
    }
    throw std::invalid_argument("bad strategy tag");
}

MetricStrategy strategy_from_string(const std::string& s) {
    if (s == "cross_product") return MetricStrategy::cross_product;
    if (s == "curl_form") return MetricStrategy::curl_form;
    if (s == "parent_inherited") return MetricStrategy::parent_inherited;
    if (s == "overintegrated") return MetricStrategy::overintegrated;
    throw std::invalid_argument("unknown metric strategy: " + s);
}

namespace {

Grid3 hadamard(const Grid3& a, const Grid3& b) {
    Grid3 g = a;
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] *= b.v[i];
    return g;
}

Grid3 minus(const Grid3& a, const Grid3& b) {
    Grid3 g = a;
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] -= b.v[i];
    return g;
}

Grid3 resample3(const Grid3& f, const std::vector<double>& mat, int rows) {
    Grid3 g = apply_matrix(f, mat, rows, 0);
    g = apply_matrix(g, mat, rows, 1);
    return apply_matrix(g, mat, rows, 2);
}

Grid2 resample2(const Grid2& f, const std::vector<double>& mat, int rows) {
    Grid2 g = apply_matrix2(f, mat, rows, 0);
    return apply_matrix2(g, mat, rows, 1);
}

Grid3 jacobian_from(const std::array<std::array<Grid3, 3>, 3>& a) {
    const auto& n = a[0][0].n;
    Grid3 jac(n[0], n[1], n[2]);
    for (size_t p = 0; p < jac.v.size(); ++p) {
        Vec3 a1{a[0][0].v[p], a[0][1].v[p], a[0][2].v[p]};
        Vec3 a2{a[1][0].v[p], a[1][1].v[p], a[1][2].v[p]};
        Vec3 a3{a[2][0].v[p], a[2][1].v[p], a[2][2].v[p]};
        jac.v[p] = dot(a1, cross(a2, a3));
    }
    return jac;
}

void require_positive(const Grid3& jac, const char* what) {
    for (double v : jac.v)
        if (!(v > 0.0)) throw std::runtime_error(std::string("nonpositive Jacobian in ") + what);
}

// Exact geometry values and first derivatives sampled on a target grid.
struct GeometrySamples {
    std::array<Grid3, 3> x;                  // X_c
    std::array<std::array<Grid3, 3>, 3> dx;  // dx[c][i] = dX_c/dxi^i
};

GeometrySamples sample_geometry(const ElementMapping& m, const NodeSet& target) {
    const NodeSet& gs = cached_node_set(m.kind, m.degree);
    auto dg = differentiation_matrix(gs);
    auto mat = interpolation_matrix(gs, target.nodes);
    GeometrySamples out;
    for (int c = 0; c < 3; ++c) {
        out.x[c] = resample3(m.xyz[c], mat, target.size());
        for (int i = 0; i < 3; ++i)
            out.dx[c][i] = resample3(apply_diff(m.xyz[c], dg, i), mat, target.size());
    }
    return out;
}

}  // namespace

CovariantBasis covariant_basis(const ElementMapping& m, const NodeSet& ns) {
    auto x = interpolate_mapping(m, ns);
    auto d = differentiation_matrix(ns);
    CovariantBasis basis;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) basis.a[i][c] = apply_diff(x[c], d, i);
    return basis;
}

double metric_scale(const MetricSet& ms) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int n = 0; n < 3; ++n)
            for (double v : ms.ja[i][n].v) m = std::max(m, std::abs(v));
    return m * ms.degree * ms.degree;
}

MetricSet metrics_cross_product(const CovariantBasis& basis) {
    const auto& shape = basis.a[0][0].n;
    MetricSet ms;
    ms.degree = shape[0] - 1;
    ms.strategy = MetricStrategy::cross_product;
    ms.build_degree = ms.degree;
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        for (int n = 0; n < 3; ++n) ms.ja[i][n] = Grid3(shape[0], shape[1], shape[2]);
        for (size_t p = 0; p < basis.a[0][0].v.size(); ++p) {
            Vec3 aj{basis.a[j][0].v[p], basis.a[j][1].v[p], basis.a[j][2].v[p]};
            Vec3 ak{basis.a[k][0].v[p], basis.a[k][1].v[p], basis.a[k][2].v[p]};
            Vec3 c = cross(aj, ak);
            for (int n = 0; n < 3; ++n) ms.ja[i][n].v[p] = c[n];
        }
    }
    ms.jac = jacobian_from(basis.a);
    require_positive(ms.jac, "cross-product metrics");
    ms.ja_build = ms.ja;
    ms.jac_build = ms.jac;
    return ms;
}

MetricSet metrics_curl_form(const ElementMapping& m, const NodeSet& ns, int m_interp) {
    const int n_sol = ns.degree;
    if (m_interp < 0) m_interp = n_sol;
    if (m_interp < n_sol)
        throw std::invalid_argument("curl-form build degree must be >= solution degree");

    const NodeSet& bs = cached_node_set(NodeKind::lobatto, m_interp);
    auto db = differentiation_matrix(bs);
    auto geo = sample_geometry(m, bs);

    MetricSet ms;
    ms.degree = n_sol;
    ms.build_degree = m_interp;
    ms.strategy =
        m_interp > n_sol ? MetricStrategy::overintegrated : MetricStrategy::curl_form;

    for (int n = 0; n < 3; ++n) {
        int mi = (n + 1) % 3, li = (n + 2) % 3;
        std::array<Grid3, 3> prod;  // I^M(X_l dX_m/dxi^i) nodal products
        for (int i = 0; i < 3; ++i) prod[i] = hadamard(geo.x[li], geo.dx[mi][i]);
        ms.ja_build[0][n] = minus(apply_diff(prod[1], db, 2), apply_diff(prod[2], db, 1));
        ms.ja_build[1][n] = minus(apply_diff(prod[2], db, 0), apply_diff(prod[0], db, 2));
        ms.ja_build[2][n] = minus(apply_diff(prod[0], db, 1), apply_diff(prod[1], db, 0));
    }

    auto transfer = interpolation_matrix(bs, ns.nodes);
    for (int i = 0; i < 3; ++i)
        for (int n = 0; n < 3; ++n) ms.ja[i][n] = resample3(ms.ja_build[i][n], transfer, ns.size());

    ms.jac = jacobian_from(covariant_basis(m, ns).a);
    require_positive(ms.jac, "curl-form metrics");

    std::array<std::array<Grid3, 3>, 3> a_exact;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) a_exact[i][c] = geo.dx[c][i];
    ms.jac_build = jacobian_from(a_exact);
    return ms;
}

MetricSet inherit_parent_metrics(const MetricSet& parent, const AffineSubmap& sub,
                                 const NodeSet& ns) {
    if (parent.degree != ns.degree)
        throw std::invalid_argument("parent metric degree does not match solution degree");

    // Per-axis targets alpha xi + c inside the parent reference element.
    std::array<std::vector<double>, 3> mats;
    for (int d = 0; d < 3; ++d) {
        std::vector<double> targets(ns.size());
        for (int p = 0; p < ns.size(); ++p)
            targets[p] = sub.alpha[d] * ns.nodes[p] + sub.offset[d];
        mats[d] = interpolation_matrix(ns, targets);
    }
    auto restrict3 = [&](const Grid3& f) {
        Grid3 g = apply_matrix(f, mats[0], ns.size(), 0);
        g = apply_matrix(g, mats[1], ns.size(), 1);
        return apply_matrix(g, mats[2], ns.size(), 2);
    };

    MetricSet child;
    child.degree = ns.degree;
    child.strategy = MetricStrategy::parent_inherited;
    child.build_degree = ns.degree;
    double vol_scale = sub.alpha[0] * sub.alpha[1] * sub.alpha[2];
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        double face_scale = sub.alpha[j] * sub.alpha[k];
        for (int n = 0; n < 3; ++n) {
            child.ja[i][n] = restrict3(parent.ja[i][n]);
            for (double& v : child.ja[i][n].v) v *= face_scale;
        }
    }
    child.jac = restrict3(parent.jac);
    for (double& v : child.jac.v) v *= vol_scale;
    require_positive(child.jac, "inherited metrics");
    child.ja_build = child.ja;
    child.jac_build = child.jac;
    return child;
}

double condition_v_residual(const MetricSet& ms, const NodeSet& ns) {
    const bool on_build = ms.strategy == MetricStrategy::overintegrated;
    const NodeSet& grid =
        on_build ? cached_node_set(NodeKind::lobatto, ms.build_degree) : ns;
    const auto& ja = on_build ? ms.ja_build : ms.ja;
    auto d = differentiation_matrix(grid);
    double worst = 0.0;
    for (int n = 0; n < 3; ++n) {
        Grid3 t0 = apply_diff(ja[0][n], d, 0);
        Grid3 t1 = apply_diff(ja[1][n], d, 1);
        Grid3 t2 = apply_diff(ja[2][n], d, 2);
        for (size_t p = 0; p < t0.v.size(); ++p)
            worst = std::max(worst, std::abs(t0.v[p] + t1.v[p] + t2.v[p]));
    }
    return worst;
}

FaceMetric face_metrics_parent(const FacePatch& face, const NodeSet& ns, int normal_axis,
                               int m_interp) {
    if (m_interp < 0) m_interp = ns.degree;
    if (normal_axis < 0 || normal_axis > 2) throw std::invalid_argument("bad normal axis");

    const NodeSet& gs = cached_node_set(face.kind, face.degree);
    auto dg = differentiation_matrix(gs);
    const NodeSet& bs = cached_node_set(NodeKind::lobatto, m_interp);
    auto lift = interpolation_matrix(gs, bs.nodes);
    auto db = differentiation_matrix(bs);

    // Exact face values and tangential derivatives on the build grid.
    std::array<Grid2, 3> gamma;
    std::array<std::array<Grid2, 2>, 3> dgamma;  // dgamma[c][t]
    for (int c = 0; c < 3; ++c) {
        gamma[c] = resample2(face.xyz[c], lift, bs.size());
        for (int t = 0; t < 2; ++t)
            dgamma[c][t] = resample2(apply_matrix2(face.xyz[c], dg.a, gs.size(), t), lift,
                                     bs.size());
    }

    // epsilon(axis, t1, t2) with tangential axes in increasing order.
    double sign = normal_axis == 1 ? -1.0 : 1.0;

    FaceMetric fm;
    fm.degree = ns.degree;
    fm.kind = ns.kind;
    fm.normal_axis = normal_axis;
    fm.build_degree = m_interp;
    auto transfer = interpolation_matrix(bs, ns.nodes);
    for (int n = 0; n < 3; ++n) {
        int mi = (n + 1) % 3, li = (n + 2) % 3;
        Grid2 pr = gamma[li];
        Grid2 ps = gamma[li];
        for (size_t p = 0; p < pr.v.size(); ++p) {
            pr.v[p] *= dgamma[mi][0].v[p];
            ps.v[p] *= dgamma[mi][1].v[p];
        }
        Grid2 curl = apply_matrix2(ps, db.a, bs.size(), 0);
        Grid2 other = apply_matrix2(pr, db.a, bs.size(), 1);
        for (size_t p = 0; p < curl.v.size(); ++p)
            curl.v[p] = -sign * (curl.v[p] - other.v[p]);
        fm.jan_build[n] = curl;
        fm.jan[n] = resample2(curl, transfer, ns.size());
    }
    return fm;
}

FaceMetric restrict_face_metric(const FaceMetric& parent, const FaceAffine& submap,
                                double beta) {
    const NodeSet& bs = cached_node_set(NodeKind::lobatto, parent.build_degree);
    const NodeSet& ss = cached_node_set(parent.kind, parent.degree);

    FaceMetric child = parent;
    child.beta_applied = true;

    std::array<std::vector<double>, 2> sol_mats, build_mats;
    for (int t = 0; t < 2; ++t) {
        std::vector<double> sol_targets(ss.size()), build_targets(bs.size());
        for (int p = 0; p < ss.size(); ++p)
            sol_targets[p] = submap.alpha[t] * ss.nodes[p] + submap.offset[t];
        for (int p = 0; p < bs.size(); ++p)
            build_targets[p] = submap.alpha[t] * bs.nodes[p] + submap.offset[t];
        sol_mats[t] = interpolation_matrix(bs, sol_targets);
        build_mats[t] = interpolation_matrix(bs, build_targets);
    }
    for (int n = 0; n < 3; ++n) {
        Grid2 g = apply_matrix2(parent.jan_build[n], sol_mats[0], ss.size(), 0);
        child.jan[n] = apply_matrix2(g, sol_mats[1], ss.size(), 1);
        for (double& v : child.jan[n].v) v *= beta;
        Grid2 b = apply_matrix2(parent.jan_build[n], build_mats[0], bs.size(), 0);
        child.jan_build[n] = apply_matrix2(b, build_mats[1], bs.size(), 1);
        for (double& v : child.jan_build[n].v) v *= beta;
    }
    return child;
}

Grid2 metric_face_trace(const MetricSet& ms, const NodeSet& ns, int side, int n) {
    int axis = face_axis(side);
    auto bvec = boundary_interpolation_vector(ns, face_sign(side));
    return face_trace(ms.ja[axis][n], bvec, axis);
}

Grid2 metric_face_trace_build(const MetricSet& ms, int side, int n) {
    const NodeSet& bs = cached_node_set(NodeKind::lobatto, ms.build_degree);
    int axis = face_axis(side);
    auto bvec = boundary_interpolation_vector(bs, face_sign(side));
    return face_trace(ms.ja_build[axis][n], bvec, axis);
}

namespace {

double weighted_face_difference(const Grid2& a, const Grid2& b, const NodeSet& w1,
                                const NodeSet& w2) {
    double worst = 0.0;
    for (int p = 0; p < a.n[0]; ++p)
        for (int q = 0; q < a.n[1]; ++q)
            worst = std::max(worst,
                             std::abs(a(p, q) - b(p, q)) * w1.weights[p] * w2.weights[q]);
    return worst;
}

// One side of a face: face-metric values against the element's volume trace.
double side_residual(const MetricSet& ms, const NodeSet& ns, int side, const FaceMetric& fm,
                     bool use_build) {
    double worst = 0.0;
    if (use_build) {
        const NodeSet& bs = cached_node_set(NodeKind::lobatto, ms.build_degree);
        for (int n = 0; n < 3; ++n)
            worst = std::max(worst, weighted_face_difference(
                                        fm.jan_build[n], metric_face_trace_build(ms, side, n),
                                        bs, bs));
    } else {
        for (int n = 0; n < 3; ++n)
            worst = std::max(worst, weighted_face_difference(
                                        fm.jan[n], metric_face_trace(ms, ns, side, n), ns, ns));
    }
    return worst;
}

}  // namespace

double condition_f_residual(const Mesh& mesh, const ConformingFace& face,
                            const std::vector<MetricSet>& metrics, const FaceMetric& fm,
                            const NodeSet& ns) {
    (void)mesh;
    bool build = metrics[face.left_elem].strategy == MetricStrategy::overintegrated;
    double left = side_residual(metrics[face.left_elem], ns, face.left_side, fm, build);
    double right = side_residual(metrics[face.right_elem], ns, face.right_side, fm, build);
    return std::max(left, right);
}

double condition_f_residual(const Mesh& mesh, const MortarFace& mortar,
                            const std::vector<MetricSet>& metrics, const FaceMetric& parent_fm,
                            const NodeSet& ns) {
    (void)mesh;
    bool build = metrics[mortar.parent_elem].strategy == MetricStrategy::overintegrated;
    double worst =
        side_residual(metrics[mortar.parent_elem], ns, mortar.parent_side, parent_fm, build);
    for (const auto& child : mortar.children) {
        FaceMetric cm = restrict_face_metric(parent_fm, child.submap, child.beta);
        worst = std::max(worst, side_residual(metrics[child.elem], ns, child.side, cm, build));
    }
    return worst;
}

std::vector<MetricSet> build_metrics(const Mesh& mesh, const NodeSet& ns,
                                     MetricStrategy strategy, int m_interp) {
    std::vector<MetricSet> out(mesh.elements.size());

    if (strategy == MetricStrategy::parent_inherited) {
        std::map<int, MetricSet> parent_metrics;
        const int k = mesh.spec.K;
        const double h = 1.0 / k;
        for (size_t e = 0; e < mesh.elements.size(); ++e) {
            const ElementInfo& info = mesh.elements[e];
            if (info.level == 0) {
                out[e] = metrics_curl_form(info.mapping, ns, ns.degree);
                continue;
            }
            auto it = parent_metrics.find(info.parent_box);
            if (it == parent_metrics.end()) {
                int ix = info.parent_box / (k * k);
                int iy = (info.parent_box / k) % k;
                int iz = info.parent_box % k;
                Box box{{ix * h, iy * h, iz * h}, {(ix + 1) * h, (iy + 1) * h, (iz + 1) * h}};
                auto mapping = sample_analytic_mapping(mesh.spec.deform, box, mesh.spec.Ng,
                                                       NodeKind::lobatto);
                it = parent_metrics
                         .emplace(info.parent_box, metrics_curl_form(mapping, ns, ns.degree))
                         .first;
            }
            out[e] = inherit_parent_metrics(it->second, info.submap, ns);
        }
        return out;
    }

    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const ElementMapping& m = mesh.elements[e].mapping;
        switch (strategy) {
            case MetricStrategy::cross_product:
                out[e] = metrics_cross_product(covariant_basis(m, ns));
                break;
            case MetricStrategy::curl_form:
                out[e] = metrics_curl_form(m, ns, ns.degree);
                break;
            case MetricStrategy::overintegrated: {
                int m_eff = m_interp < 0 ? 2 * ns.degree : m_interp;
                out[e] = metrics_curl_form(m, ns, m_eff);
                if (out[e].strategy != MetricStrategy::overintegrated)
                    out[e].strategy = MetricStrategy::overintegrated;
                break;
            }
            default:
                throw std::invalid_argument("unhandled metric strategy");
        }
    }
    return out;
}

}  // namespace fsp
