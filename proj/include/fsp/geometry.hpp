#pragma once
#include <array>
#include <cmath>
#include <string>

#include "fsp/spectral.hpp"

namespace fsp {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double max_abs(const Vec3& a) {
    return std::max(std::abs(a.x), std::max(std::abs(a.y), std::abs(a.z)));
}

// Memoized node sets; safe for concurrent readers.
const NodeSet& cached_node_set(NodeKind kind, int degree);

struct Box {
    Vec3 lo{0, 0, 0};
    Vec3 hi{1, 1, 1};
};

// Smooth periodic deformation of the unit cube,
//   full:     d = a (sin(2pi w2 y + p2) sin(2pi w3 z + p3),
//                    sin(2pi w3 z + p3) sin(2pi w1 x + p1),
//                    sin(2pi w1 x + p1) sin(2pi w2 y + p2))
//   extruded: d = a (sin(2pi w2 y + p2), sin(2pi w1 x + p1), 0)
// Integer wavenumbers keep the displacement 1-periodic in each direction.
struct DeformSpec {
    double amplitude = 0.0;
    std::array<int, 3> wavenumber{1, 1, 1};
    std::array<double, 3> phase{0.0, 0.0, 0.0};
    bool extruded = false;
};

Vec3 deform_point(const DeformSpec& spec, const Vec3& p);

// Polynomial surface patch: nodal coordinates on the (Ng+1)^2 tensor grid in
// face parameters (r,s).
struct FacePatch {
    int degree = 0;
    NodeKind kind = NodeKind::lobatto;
    std::array<Grid2, 3> xyz;
};

Vec3 evaluate(const FacePatch& f, double r, double s);

// Polynomial volume mapping: nodal coordinates on the (Ng+1)^3 tensor grid in
// reference coordinates (xi, eta, zeta), each in [-1,1].
struct ElementMapping {
    int degree = 0;
    NodeKind kind = NodeKind::lobatto;
    std::array<Grid3, 3> xyz;
};

Vec3 evaluate(const ElementMapping& m, double xi, double eta, double zeta);

// Child reference -> parent reference, r^d = alpha_d xi^d + c_d. beta is the
// face area scale alpha_j alpha_k of a tangential pair (1/4 for halving).
struct AffineSubmap {
    std::array<double, 3> alpha{1.0, 1.0, 1.0};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
    double beta = 1.0;
};

inline double face_beta(const AffineSubmap& s, int normal_axis) {
    double b = 1.0;
    for (int d = 0; d < 3; ++d)
        if (d != normal_axis) b *= s.alpha[d];
    return b;
}

// Local sides 1..6: 1 zeta=-1, 2 zeta=+1, 3 eta=-1, 4 xi=+1, 5 eta=+1, 6 xi=-1.
// Face parameters (r,s) are the tangential reference axes in increasing order.
int face_axis(int side);
int face_sign(int side);
int side_of(int axis, int sign);

ElementMapping sample_analytic_mapping(const DeformSpec& spec, const Box& box, int ng,
                                       NodeKind kind);

std::array<FacePatch, 6> extract_faces(const ElementMapping& m);

// Quadrants 1..4 tile (r,s) as 1:(-,-) 2:(+,-) 3:(-,+) 4:(+,+); child nodal
// points are parent evaluations at the half-scale parameters, so the child
// represents the identical surface piece.
FacePatch child_face_patch(const FacePatch& parent, int quadrant);

struct ChildElement {
    ElementMapping mapping;
    AffineSubmap submap;
};

// Octants indexed o = i + 2j + 4k over the (xi, eta, zeta) halves; children
// keep the parent degree and sample the parent polynomial (watertight).
std::array<ChildElement, 8> subdivide_element(const ElementMapping& parent);

// Nodal Jacobians a1 . (a2 x a3) at the geometry nodes.
std::vector<double> nodal_jacobians(const ElementMapping& m);

// Mapping coordinates evaluated on another tensor grid (exact when the target
// degree is >= the mapping degree, plain interpolant sampling otherwise).
std::array<Grid3, 3> interpolate_mapping(const ElementMapping& m, const NodeSet& target);

}  // namespace fsp
