#include "fsp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fsp {

namespace {

constexpr double kMatchTol = 1e-10;

struct Slot {
    int elem;
    int side;
    int axis;
    int level;
    Vec3 center;
    bool matched = false;
};

Vec3 patch_center(const FacePatch& f) { return evaluate(f, 0.0, 0.0); }

bool near(const Vec3& a, const Vec3& b, const Vec3& shift) {
    return max_abs(a + shift - b) <= kMatchTol;
}

// Periodic translations to try along a face's normal axis (unit cube period 1).
std::array<Vec3, 3> axis_shifts(int axis) {
    Vec3 plus, minus;
    plus[axis] = 1.0;
    minus[axis] = -1.0;
    return {Vec3{}, plus, minus};
}

std::array<int, 3> lattice_coords(int id, int k) {
    return {id / (k * k), (id / k) % k, id % k};
}

}  // namespace

const FacePatch& element_face(const Mesh& mesh, int elem, int side) {
    return mesh.faces[elem][side - 1];
}

Mesh build_mesh(const MeshSpec& spec) {
    const int k = spec.K;
    if (k < 2) throw std::invalid_argument("mesh needs K >= 2 elements per direction");
    for (int id : spec.refine_set)
        if (id < 0 || id >= k * k * k) throw std::invalid_argument("refine id out of range");
    for (size_t a = 0; a < spec.refine_set.size(); ++a)
        for (size_t b = a + 1; b < spec.refine_set.size(); ++b) {
            auto ca = lattice_coords(spec.refine_set[a], k);
            auto cb = lattice_coords(spec.refine_set[b], k);
            int diff_axes = 0, steps = 0;
            for (int d = 0; d < 3; ++d) {
                int dd = std::abs(ca[d] - cb[d]);
                dd = std::min(dd, k - dd);  // periodic distance
                if (dd != 0) ++diff_axes;
                steps += dd;
            }
            if (diff_axes == 1 && steps == 1)
                throw std::invalid_argument("refine set contains face-adjacent elements");
            if (steps == 0) throw std::invalid_argument("duplicate refine id");
        }

    DeformSpec deform = spec.deform;
    if (spec.extruded) deform.extruded = true;

    Mesh mesh;
    mesh.spec = spec;
    mesh.spec.deform = deform;
    const double h = 1.0 / k;
    for (int ix = 0; ix < k; ++ix)
        for (int iy = 0; iy < k; ++iy)
            for (int iz = 0; iz < k; ++iz) {
                int id = (ix * k + iy) * k + iz;
                Box box{{ix * h, iy * h, iz * h}, {(ix + 1) * h, (iy + 1) * h, (iz + 1) * h}};
                auto mapping = sample_analytic_mapping(deform, box, spec.Ng, NodeKind::lobatto);
                bool refined = std::find(spec.refine_set.begin(), spec.refine_set.end(), id) !=
                               spec.refine_set.end();
                if (!refined) {
                    ElementInfo e;
                    e.mapping = std::move(mapping);
                    e.level = 0;
                    e.parent_box = id;
                    e.box = box;
                    mesh.elements.push_back(std::move(e));
                    continue;
                }
                auto children = subdivide_element(mapping);
                for (int o = 0; o < 8; ++o) {
                    ElementInfo e;
                    e.mapping = std::move(children[o].mapping);
                    e.level = 1;
                    e.parent_box = id;
                    e.octant = o;
                    e.submap = children[o].submap;
                    Vec3 mid{0.5 * (box.lo.x + box.hi.x), 0.5 * (box.lo.y + box.hi.y),
                             0.5 * (box.lo.z + box.hi.z)};
                    e.box.lo = {(o & 1) ? mid.x : box.lo.x, (o & 2) ? mid.y : box.lo.y,
                                (o & 4) ? mid.z : box.lo.z};
                    e.box.hi = {(o & 1) ? box.hi.x : mid.x, (o & 2) ? box.hi.y : mid.y,
                                (o & 4) ? box.hi.z : mid.z};
                    mesh.elements.push_back(std::move(e));
                    for (double jac : nodal_jacobians(mesh.elements.back().mapping))
                        if (jac <= 0.0)
                            throw std::runtime_error("inverted element: child Jacobian <= 0");
                }
            }

    connect_faces(mesh);
    return mesh;
}

void connect_faces(Mesh& mesh) {
    mesh.faces.clear();
    mesh.conforming.clear();
    mesh.mortars.clear();
    for (const auto& e : mesh.elements) mesh.faces.push_back(extract_faces(e.mapping));

    std::vector<Slot> slots;
    for (size_t e = 0; e < mesh.elements.size(); ++e)
        for (int side = 1; side <= 6; ++side)
            slots.push_back({static_cast<int>(e), side, face_axis(side), mesh.elements[e].level,
                             patch_center(element_face(mesh, static_cast<int>(e), side))});

    // Equal-center pairs are conforming faces (same refinement level).
    for (size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].matched) continue;
        for (size_t j = i + 1; j < slots.size(); ++j) {
            if (slots[j].matched || slots[j].axis != slots[i].axis) continue;
            if (slots[j].level != slots[i].level) continue;
            for (const Vec3& shift : axis_shifts(slots[i].axis)) {
                if (!near(slots[i].center, slots[j].center, shift)) continue;
                ConformingFace f;
                f.left_elem = slots[i].elem;
                f.left_side = slots[i].side;
                f.right_elem = slots[j].elem;
                f.right_side = slots[j].side;
                f.shift = shift;
                mesh.conforming.push_back(f);
                slots[i].matched = slots[j].matched = true;
                break;
            }
            if (slots[i].matched) break;
        }
    }

    // Remaining level-0 slots pair with four child slots at quadrant centers.
    for (auto& parent : slots) {
        if (parent.matched || parent.level != 0) continue;
        const FacePatch& pf = element_face(mesh, parent.elem, parent.side);
        MortarFace mortar;
        mortar.parent_elem = parent.elem;
        mortar.parent_side = parent.side;
        bool shift_set = false;
        int found = 0;
        for (int q = 0; q < 4; ++q) {
            double qr = (q % 2) ? 0.5 : -0.5;
            double qs = (q / 2) ? 0.5 : -0.5;
            Vec3 qc = evaluate(pf, qr, qs);
            bool quadrant_done = false;
            for (auto& child : slots) {
                if (quadrant_done) break;
                if (child.matched || child.level != 1 || child.axis != parent.axis) continue;
                for (const Vec3& shift : axis_shifts(parent.axis)) {
                    if (!near(qc, child.center, shift)) continue;
                    MortarChild mc;
                    mc.elem = child.elem;
                    mc.side = child.side;
                    mc.submap.alpha = {0.5, 0.5};
                    mc.submap.offset = {qr, qs};
                    mc.beta = face_beta(mesh.elements[child.elem].submap, parent.axis);
                    mortar.children[q] = mc;
                    if (!shift_set) {
                        mortar.shift = shift;
                        shift_set = true;
                    }
                    child.matched = true;
                    ++found;
                    quadrant_done = true;
                    break;
                }
            }
        }
        if (found != 4) throw std::runtime_error("unmatched face: mortar children incomplete");
        parent.matched = true;
        mesh.mortars.push_back(mortar);
    }

    for (const auto& s : slots)
        if (!s.matched) throw std::runtime_error("unmatched face: no geometric partner");
}

WatertightReport watertight_residual(const Mesh& mesh) {
    WatertightReport report;
    const int samples = 10;
    auto param = [&](int i) { return -1.0 + 2.0 * i / (samples - 1); };
    char label[128];

    for (const auto& f : mesh.conforming) {
        const FacePatch& left = element_face(mesh, f.left_elem, f.left_side);
        const FacePatch& right = element_face(mesh, f.right_elem, f.right_side);
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < samples; ++j) {
                double r = param(i), s = param(j);
                double gap = max_abs(evaluate(left, r, s) + f.shift - evaluate(right, r, s));
                if (gap > report.max_gap) {
                    report.max_gap = gap;
                    std::snprintf(label, sizeof(label), "conforming %d.%d|%d.%d", f.left_elem,
                                  f.left_side, f.right_elem, f.right_side);
                    report.worst_face = label;
                }
            }
    }

    for (const auto& m : mesh.mortars) {
        const FacePatch& pf = element_face(mesh, m.parent_elem, m.parent_side);
        for (int q = 0; q < 4; ++q) {
            const MortarChild& mc = m.children[q];
            const FacePatch& cf = element_face(mesh, mc.elem, mc.side);
            for (int i = 0; i < samples; ++i)
                for (int j = 0; j < samples; ++j) {
                    double r = param(i), s = param(j);
                    double pr = mc.submap.alpha[0] * r + mc.submap.offset[0];
                    double ps = mc.submap.alpha[1] * s + mc.submap.offset[1];
                    double gap =
                        max_abs(evaluate(pf, pr, ps) + m.shift - evaluate(cf, r, s));
                    if (gap > report.max_gap) {
                        report.max_gap = gap;
                        std::snprintf(label, sizeof(label), "mortar %d.%d child %d.%d",
                                      m.parent_elem, m.parent_side, mc.elem, mc.side);
                        report.worst_face = label;
                    }
                }
        }
    }
    return report;
}

TopologyReport validate_topology(const Mesh& mesh) {
    TopologyReport report;
    report.element_count = static_cast<int>(mesh.elements.size());
    report.conforming_faces = static_cast<int>(mesh.conforming.size());
    report.mortar_faces = static_cast<int>(mesh.mortars.size());

    // Face partition: every element face slot is covered exactly once.
    size_t covered = 2 * mesh.conforming.size() + 5 * mesh.mortars.size();
    if (covered != 6 * mesh.elements.size())
        throw std::runtime_error("face partition violated: slots not covered exactly once");

    double min_jac = std::numeric_limits<double>::infinity();
    for (const auto& e : mesh.elements)
        for (double jac : nodal_jacobians(e.mapping)) min_jac = std::min(min_jac, jac);
    report.min_jacobian = min_jac;
    report.watertight_gap = watertight_residual(mesh).max_gap;
    return report;
}

std::string TopologyReport::summary() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "element_count: %d\nconforming_faces: %d\nmortar_faces: %d\n"
                  "min_jacobian: %.6e\nwatertight_gap: %.6e\n",
                  element_count, conforming_faces, mortar_faces, min_jacobian, watertight_gap);
    return buf;
}

}  // namespace fsp
