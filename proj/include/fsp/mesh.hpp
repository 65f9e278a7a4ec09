#pragma once
#include <array>
#include <string>
#include <vector>

#include "fsp/geometry.hpp"

namespace fsp {

// Element ids index Mesh::elements. Parent lattice boxes are numbered
// (ix*K + iy)*K + iz on the K^3 grid.
struct ElementInfo {
    ElementMapping mapping;
    int level = 0;       // 0 lattice box, 1 refinement child
    int parent_box = 0;  // lattice id this element descends from
    int octant = -1;     // child octant, -1 for level 0
    AffineSubmap submap; // child reference -> parent reference (identity for level 0)
    Box box;             // undeformed sub-box of the unit cube
};

struct ConformingFace {
    int left_elem = -1, left_side = 0;
    int right_elem = -1, right_side = 0;
    Vec3 shift;  // right patch(r,s) = left patch(r,s) + shift (periodic translation)
};

// Child face (r,s) -> parent face parameters, r' = alpha[0] r + offset[0] etc.
struct FaceAffine {
    std::array<double, 2> alpha{1.0, 1.0};
    std::array<double, 2> offset{0.0, 0.0};
};

struct MortarChild {
    int elem = -1, side = 0;
    FaceAffine submap;
    double beta = 0.25;
};

struct MortarFace {
    int parent_elem = -1, parent_side = 0;
    std::array<MortarChild, 4> children;  // quadrant order (-,-), (+,-), (-,+), (+,+)
    Vec3 shift;  // child patch(r,s) = parent patch(submap(r,s)) + shift
};

struct MeshSpec {
    int K = 2;
    std::vector<int> refine_set;
    DeformSpec deform;
    int Ng = 4;
    bool extruded = false;
};

struct Mesh {
    MeshSpec spec;
    std::vector<ElementInfo> elements;
    std::vector<std::array<FacePatch, 6>> faces;  // per element, filled by connect_faces
    std::vector<ConformingFace> conforming;
    std::vector<MortarFace> mortars;
};

// Periodic unit-cube lattice of K^3 deformed boxes; each id in refine_set is
// replaced by its 8 subdivision children. Faces are connected on return.
Mesh build_mesh(const MeshSpec& spec);

// Rebuilds the face lists from element geometry by centroid matching with
// periodic translation. Throws on any unmatched face.
void connect_faces(Mesh& mesh);

struct WatertightReport {
    double max_gap = 0.0;
    std::string worst_face;
};

// Max coordinate discrepancy between the two sides of every conforming face
// and every mortar parent/child pair, sampled on a 10x10 parameter grid.
WatertightReport watertight_residual(const Mesh& mesh);

struct TopologyReport {
    int element_count = 0;
    int conforming_faces = 0;
    int mortar_faces = 0;
    double min_jacobian = 0.0;
    double watertight_gap = 0.0;
    std::string summary() const;
};

TopologyReport validate_topology(const Mesh& mesh);

const FacePatch& element_face(const Mesh& mesh, int elem, int side);

}  // namespace fsp
