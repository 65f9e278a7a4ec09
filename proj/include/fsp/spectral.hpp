#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace fsp {

enum class NodeKind { gauss, lobatto };

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

// 1D nodal basis: nodes strictly increasing in [-1,1], positive quadrature
// weights summing to 2, barycentric weights for stable evaluation.
struct NodeSet {
    NodeKind kind;
    int degree;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> bary;

    int size() const { return degree + 1; }
};

NodeSet build_node_set(NodeKind kind, int degree);

// D_ij = l'_j(xi_i); rows sum to zero.
struct DiffMatrix {
    int n = 0;
    std::vector<double> a;  // row-major n*n

    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

DiffMatrix differentiation_matrix(const NodeSet& ns);

// Row-major (targets.size() x (N+1)) matrix taking nodal values to values at
// targets. Rows are barycentric cardinal evaluations; an exact node hit gives
// a one-hot row.
std::vector<double> interpolation_matrix(const NodeSet& ns, std::span<const double> targets);

std::vector<double> interpolate(const NodeSet& ns, std::span<const double> nodal_values,
                                std::span<const double> targets);

double interpolate_at(const NodeSet& ns, std::span<const double> nodal_values, double target);

// b_j = l_j(side), side = +-1; dotting with nodal data evaluates the
// interpolant on the face.
std::vector<double> boundary_interpolation_vector(const NodeSet& ns, int side);

// Scalar tensor-product grid; index (j,k,l) with l fastest.
struct Grid3 {
    std::array<int, 3> n{0, 0, 0};  // points per direction
    std::vector<double> v;

    Grid3() = default;
    Grid3(int n1, int n2, int n3) : n{n1, n2, n3}, v(static_cast<size_t>(n1) * n2 * n3, 0.0) {}

    size_t idx(int j, int k, int l) const {
        return (static_cast<size_t>(j) * n[1] + k) * n[2] + l;
    }
    double& operator()(int j, int k, int l) { return v[idx(j, k, l)]; }
    double operator()(int j, int k, int l) const { return v[idx(j, k, l)]; }
    size_t size() const { return v.size(); }
};

struct Grid2 {
    std::array<int, 2> n{0, 0};
    std::vector<double> v;

    Grid2() = default;
    Grid2(int n1, int n2) : n{n1, n2}, v(static_cast<size_t>(n1) * n2, 0.0) {}

    size_t idx(int j, int k) const { return static_cast<size_t>(j) * n[1] + k; }
    double& operator()(int j, int k) { return v[idx(j, k)]; }
    double operator()(int j, int k) const { return v[idx(j, k)]; }
    size_t size() const { return v.size(); }
};

// sum_jkl A_jkl B_jkl w_j w_k w_l
double discrete_inner_product(const Grid3& a, const Grid3& b, const NodeSet& ns1,
                              const NodeSet& ns2, const NodeSet& ns3);

// Differentiate nodal data along one axis: (D f)_jkl in direction axis.
Grid3 apply_diff(const Grid3& f, const DiffMatrix& d, int axis);

// Contract axis with a row-major (m x n_axis) matrix (interpolation to a new
// 1D grid of size m along that axis).
Grid3 apply_matrix(const Grid3& f, std::span<const double> mat, int rows, int axis);

Grid2 apply_matrix2(const Grid2& f, std::span<const double> mat, int rows, int axis);

// Evaluate the interpolant on the face axis=side by contracting with the
// boundary interpolation vector.
Grid2 face_trace(const Grid3& f, std::span<const double> bvec, int axis);

struct ProductMismatch {
    double max_mismatch;
    double witness_point;  // argmax in child coordinates
};

// Compares the restriction of I^N(U*V) to the left half-interval against the
// interpolant built from U*V sampled at the mapped child nodes. Zero exactly
// when deg(U*V) <= N.
ProductMismatch product_interpolation_mismatch(std::span<const double> u_vals,
                                               std::span<const double> v_vals,
                                               const NodeSet& ns);

}  // namespace fsp
