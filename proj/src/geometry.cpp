#include "fsp/geometry.hpp"

#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fsp {

const NodeSet& cached_node_set(NodeKind kind, int degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, NodeSet> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(static_cast<int>(kind), degree);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_node_set(kind, degree)).first;
    return it->second;
}

Vec3 deform_point(const DeformSpec& spec, const Vec3& p) {
    using std::numbers::pi;
    double s1 = std::sin(2.0 * pi * spec.wavenumber[0] * p.x + spec.phase[0]);
    double s2 = std::sin(2.0 * pi * spec.wavenumber[1] * p.y + spec.phase[1]);
    double s3 = std::sin(2.0 * pi * spec.wavenumber[2] * p.z + spec.phase[2]);
    double a = spec.amplitude;
    if (spec.extruded) return {p.x + a * s2, p.y + a * s1, p.z};
    return {p.x + a * s2 * s3, p.y + a * s3 * s1, p.z + a * s1 * s2};
}

namespace {

std::vector<double> cardinal_row(const NodeSet& ns, double t) {
    return interpolation_matrix(ns, std::span<const double>(&t, 1));
}

}  // namespace

Vec3 evaluate(const FacePatch& f, double r, double s) {
    const NodeSet& ns = cached_node_set(f.kind, f.degree);
    auto lr = cardinal_row(ns, r);
    auto ls = cardinal_row(ns, s);
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = 0; i <= f.degree; ++i) {
            double partial = 0.0;
            for (int j = 0; j <= f.degree; ++j) partial += ls[j] * f.xyz[c](i, j);
            acc += lr[i] * partial;
        }
        out[c] = acc;
    }
    return out;
}

Vec3 evaluate(const ElementMapping& m, double xi, double eta, double zeta) {
    const NodeSet& ns = cached_node_set(m.kind, m.degree);
    auto l1 = cardinal_row(ns, xi);
    auto l2 = cardinal_row(ns, eta);
    auto l3 = cardinal_row(ns, zeta);
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int j = 0; j <= m.degree; ++j) {
            double partial_j = 0.0;
            for (int k = 0; k <= m.degree; ++k) {
                double partial_k = 0.0;
                for (int l = 0; l <= m.degree; ++l) partial_k += l3[l] * m.xyz[c](j, k, l);
                partial_j += l2[k] * partial_k;
            }
            acc += l1[j] * partial_j;
        }
        out[c] = acc;
    }
    return out;
}

int face_axis(int side) {
    switch (side) {
        case 1: case 2: return 2;
        case 3: case 5: return 1;
        case 4: case 6: return 0;
        default: throw std::invalid_argument("face side must be 1..6");
    }
}

int face_sign(int side) {
    switch (side) {
        case 1: case 3: case 6: return -1;
        case 2: case 4: case 5: return +1;
        default: throw std::invalid_argument("face side must be 1..6");
    }
}

int side_of(int axis, int sign) {
    if (axis == 0) return sign > 0 ? 4 : 6;
    if (axis == 1) return sign > 0 ? 5 : 3;
    if (axis == 2) return sign > 0 ? 2 : 1;
    throw std::invalid_argument("axis must be 0..2");
}

std::vector<double> nodal_jacobians(const ElementMapping& m) {
    const NodeSet& ns = cached_node_set(m.kind, m.degree);
    auto d = differentiation_matrix(ns);
    std::array<std::array<Grid3, 3>, 3> da;  // da[i][c] = d x_c / d xi^{i+1}
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) da[i][c] = apply_diff(m.xyz[c], d, i);
    const int n = m.degree + 1;
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n) * n * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                Vec3 a1{da[0][0](j, k, l), da[0][1](j, k, l), da[0][2](j, k, l)};
                Vec3 a2{da[1][0](j, k, l), da[1][1](j, k, l), da[1][2](j, k, l)};
                Vec3 a3{da[2][0](j, k, l), da[2][1](j, k, l), da[2][2](j, k, l)};
                out.push_back(dot(a1, cross(a2, a3)));
            }
    return out;
}

ElementMapping sample_analytic_mapping(const DeformSpec& spec, const Box& box, int ng,
                                       NodeKind kind) {
    if (ng < 1) throw std::invalid_argument("geometry degree must be >= 1");
    for (int d = 0; d < 3; ++d)
        if (!(box.hi[d] > box.lo[d])) throw std::invalid_argument("degenerate box");

    const NodeSet& ns = cached_node_set(kind, ng);
    ElementMapping m;
    m.degree = ng;
    m.kind = kind;
    for (int c = 0; c < 3; ++c) m.xyz[c] = Grid3(ng + 1, ng + 1, ng + 1);
    for (int j = 0; j <= ng; ++j)
        for (int k = 0; k <= ng; ++k)
            for (int l = 0; l <= ng; ++l) {
                Vec3 p;
                double ref[3] = {ns.nodes[j], ns.nodes[k], ns.nodes[l]};
                for (int d = 0; d < 3; ++d)
                    p[d] = box.lo[d] + 0.5 * (ref[d] + 1.0) * (box.hi[d] - box.lo[d]);
                Vec3 q = deform_point(spec, p);
                for (int c = 0; c < 3; ++c) m.xyz[c](j, k, l) = q[c];
            }

    for (double jac : nodal_jacobians(m))
        if (jac <= 0.0) throw std::runtime_error("inverted element: nonpositive nodal Jacobian");
    return m;
}

std::array<Grid3, 3> interpolate_mapping(const ElementMapping& m, const NodeSet& target) {
    const NodeSet& ns = cached_node_set(m.kind, m.degree);
    auto mat = interpolation_matrix(ns, target.nodes);
    std::array<Grid3, 3> out;
    for (int c = 0; c < 3; ++c) {
        Grid3 g = apply_matrix(m.xyz[c], mat, target.size(), 0);
        g = apply_matrix(g, mat, target.size(), 1);
        out[c] = apply_matrix(g, mat, target.size(), 2);
    }
    return out;
}

std::array<FacePatch, 6> extract_faces(const ElementMapping& m) {
    const NodeSet& ns = cached_node_set(m.kind, m.degree);
    const int n = m.degree + 1;
    std::array<FacePatch, 6> out;
    for (int side = 1; side <= 6; ++side) {
        FacePatch& f = out[side - 1];
        f.degree = m.degree;
        f.kind = m.kind;
        int axis = face_axis(side);
        int sign = face_sign(side);
        if (m.kind == NodeKind::lobatto) {
            // Boundary nodes exist: slice the nodal data directly.
            int edge = sign > 0 ? m.degree : 0;
            for (int c = 0; c < 3; ++c) {
                f.xyz[c] = Grid2(n, n);
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) {
                        int jkl[3];
                        jkl[axis] = edge;
                        if (axis == 0) {
                            jkl[1] = p; jkl[2] = q;
                        } else if (axis == 1) {
                            jkl[0] = p; jkl[2] = q;
                        } else {
                            jkl[0] = p; jkl[1] = q;
                        }
                        f.xyz[c](p, q) = m.xyz[c](jkl[0], jkl[1], jkl[2]);
                    }
            }
        } else {
            auto bvec = boundary_interpolation_vector(ns, sign);
            for (int c = 0; c < 3; ++c) f.xyz[c] = face_trace(m.xyz[c], bvec, axis);
        }
    }
    return out;
}

FacePatch child_face_patch(const FacePatch& parent, int quadrant) {
    if (quadrant < 1 || quadrant > 4)
        throw std::invalid_argument("face quadrant must be 1..4");
    const NodeSet& ns = cached_node_set(parent.kind, parent.degree);
    const int n = parent.degree + 1;
    int i_half = (quadrant - 1) % 2;
    int j_half = (quadrant - 1) / 2;
    double or_ = i_half ? 0.5 : -0.5;
    double os_ = j_half ? 0.5 : -0.5;
    FacePatch child;
    child.degree = parent.degree;
    child.kind = parent.kind;
    for (int c = 0; c < 3; ++c) child.xyz[c] = Grid2(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            Vec3 v = evaluate(parent, 0.5 * ns.nodes[p] + or_, 0.5 * ns.nodes[q] + os_);
            for (int c = 0; c < 3; ++c) child.xyz[c](p, q) = v[c];
        }
    return child;
}

std::array<ChildElement, 8> subdivide_element(const ElementMapping& parent) {
    const NodeSet& ns = cached_node_set(parent.kind, parent.degree);
    const int n = parent.degree + 1;
    std::array<ChildElement, 8> out;
    for (int o = 0; o < 8; ++o) {
        ChildElement& ch = out[o];
        ch.submap.alpha = {0.5, 0.5, 0.5};
        ch.submap.offset = {(o & 1) ? 0.5 : -0.5, (o & 2) ? 0.5 : -0.5, (o & 4) ? 0.5 : -0.5};
        ch.submap.beta = 0.25;
        ch.mapping.degree = parent.degree;
        ch.mapping.kind = parent.kind;
        for (int c = 0; c < 3; ++c) ch.mapping.xyz[c] = Grid3(n, n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    Vec3 v = evaluate(parent, 0.5 * ns.nodes[j] + ch.submap.offset[0],
                                      0.5 * ns.nodes[k] + ch.submap.offset[1],
                                      0.5 * ns.nodes[l] + ch.submap.offset[2]);
                    for (int c = 0; c < 3; ++c) ch.mapping.xyz[c](j, k, l) = v[c];
                }
    }
    return out;
}

}  // namespace fsp
