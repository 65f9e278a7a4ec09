#pragma once
#include <array>
#include <string>
#include <vector>

#include "fsp/mesh.hpp"

namespace fsp {

enum class MetricStrategy { cross_product, curl_form, parent_inherited, overintegrated };

std::string to_string(MetricStrategy s);
MetricStrategy strategy_from_string(const std::string& s);

// a[i][c]: component c of the tangent vector a_i = dX/dxi^i on the solution
// grid, obtained by differentiating the degree-N interpolant of the mapping.
struct CovariantBasis {
    std::array<std::array<Grid3, 3>, 3> a;
};

CovariantBasis covariant_basis(const ElementMapping& m, const NodeSet& ns);

// Volume metric terms of one element. ja[i][n] holds the n-th component of
// Ja^i on the solution grid; jac is the covariant-basis Jacobian there. For
// the curl-based strategies the same polynomial field is also stored on the
// degree-M lobatto build grid (ja_build, with the exactly sampled Jacobian
// jac_build), which is the authoritative representation when M > N.
struct MetricSet {
    int degree = 0;
    MetricStrategy strategy = MetricStrategy::cross_product;
    int build_degree = 0;
    std::array<std::array<Grid3, 3>, 3> ja;
    Grid3 jac;
    std::array<std::array<Grid3, 3>, 3> ja_build;
    Grid3 jac_build;
};

// Rounding-aware magnitude for residual thresholds: max |Ja| x N^2.
double metric_scale(const MetricSet& ms);

MetricSet metrics_cross_product(const CovariantBasis& basis);

// Ja^i_n = -[curl of I^M(X_l grad X_m)]_i with (n,m,l) cyclic. Products are
// sampled exactly from the geometry polynomial on the degree-M lobatto grid,
// the curl is taken there, and the field is evaluated on the solution grid.
MetricSet metrics_curl_form(const ElementMapping& m, const NodeSet& ns, int m_interp);

// Child metrics as the affinely restricted parent fields: Ja^i scaled by
// alpha_j alpha_k (cyclic), J by alpha_1 alpha_2 alpha_3.
MetricSet inherit_parent_metrics(const MetricSet& parent, const AffineSubmap& sub,
                                 const NodeSet& ns);

// max_n max_nodes |sum_i D_i (Ja^i)_n| on the grid where the strategy's
// divergence is defined (build grid for overintegrated, solution grid else).
double condition_v_residual(const MetricSet& ms, const NodeSet& ns);

// Face-normal metric components (Ja^axis)_n on a face grid, built from face
// data only. The stored values are unsigned coordinate-surface normals; the
// outward normal on a given side is face_sign(side) times them.
struct FaceMetric {
    int degree = 0;
    NodeKind kind = NodeKind::gauss;
    int normal_axis = 0;
    bool beta_applied = false;
    std::array<Grid2, 3> jan;        // solution face grid
    int build_degree = 0;
    std::array<Grid2, 3> jan_build;  // lobatto build grid
};

// Tangential-derivative curl construction on the parent face, using the
// degree-M lobatto build grid (m_interp < 0 means the solution degree).
FaceMetric face_metrics_parent(const FacePatch& face, const NodeSet& ns, int normal_axis,
                               int m_interp = -1);

// Exact polynomial restriction of a parent face metric to one child's
// parameter sub-square, scaled by beta.
FaceMetric restrict_face_metric(const FaceMetric& parent, const FaceAffine& submap, double beta);

// Trace of the volume metric component (Ja^axis)_n onto one element face
// (slicing at lobatto nodes, boundary interpolation at gauss).
Grid2 metric_face_trace(const MetricSet& ms, const NodeSet& ns, int side, int n);
Grid2 metric_face_trace_build(const MetricSet& ms, int side, int n);

// Quadrature-weighted max nodal difference between the face metric and the
// volume-metric traces over every side of the face.
double condition_f_residual(const Mesh& mesh, const ConformingFace& face,
                            const std::vector<MetricSet>& metrics, const FaceMetric& fm,
                            const NodeSet& ns);
double condition_f_residual(const Mesh& mesh, const MortarFace& mortar,
                            const std::vector<MetricSet>& metrics, const FaceMetric& parent_fm,
                            const NodeSet& ns);

// Per-element metric assembly for a whole mesh under one strategy.
// parent_inherited computes each refined parent's curl metrics on the parent
// reference element and restricts them into its children; m_interp applies to
// the overintegrated strategy (ignored otherwise).
std::vector<MetricSet> build_metrics(const Mesh& mesh, const NodeSet& ns,
                                     MetricStrategy strategy, int m_interp = -1);

}  // namespace fsp
