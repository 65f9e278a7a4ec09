#pragma once
#include <array>
#include <stdexcept>
#include <vector>

#include "fsp/metrics.hpp"

namespace fsp {

inline constexpr double kGamma = 1.4;

// Conservative state or flux values (rho, rho v1, rho v2, rho v3, E).
using State5 = std::array<double, 5>;

struct EulerPrimitive {
    double rho = 0.7, v1 = 0.2, v2 = 0.3, v3 = -0.4, p = 1.0;
};

State5 conservative_state(const EulerPrimitive& prim);
double pressure(const State5& u);
double sound_speed(const State5& u);

// f_1, f_2, f_3 with the ideal-gas closure.
std::array<State5, 3> euler_physical_flux(const State5& u);

// 0.5 (f(uL) + f(uR)) . n - 0.5 lambda |n| (uR - uL); lambda is the larger
// |v.n_hat| + c_s of the two states. Positively homogeneous in the scaled
// normal and antisymmetric under (swap states, flip normal).
State5 lax_friedrichs_numerical_flux(const State5& ul, const State5& ur, const Vec3& normal);

// Per-element nodal fields, one Grid3 per conservative component.
struct ElementState {
    std::array<Grid3, 5> comp;
};
using MeshState = std::vector<ElementState>;

struct SolverConfig {
    int N = 4;
    NodeKind node_kind = NodeKind::gauss;
    double cfl = 0.5;
    double final_time = 0.5;
    MetricStrategy strategy = MetricStrategy::curl_form;
    int M = -1;  // overintegration build degree; -1 means 2N for overintegrated
    EulerPrimitive freestream;
};

struct BlowUpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// F-tilde^i = sum_n (Ja^i)_n f_n, collocated on the solution grid.
std::array<std::array<Grid3, 5>, 3> contravariant_volume_flux(const ElementState& u,
                                                              const MetricSet& ms);

// sum_i D_i applied to F-tilde^i.
std::array<Grid3, 5> strong_divergence(const std::array<std::array<Grid3, 5>, 3>& flux,
                                       const DiffMatrix& d);

// Two-point flux-differencing volume operator with the arithmetic-mean flux
// and metric averages; equals sum_n C_n (metric divergence) at any constant
// state by the zero-row-sum structure of D.
std::array<Grid3, 5> flux_difference_volume(const ElementState& u, const MetricSet& ms,
                                            const NodeSet& ns);

// Everything precomputed for RHS evaluation: metrics, mortar face metrics,
// and the restriction/projection operators of the active quadrature grid
// (build grid for the overintegrated strategy, solution grid otherwise).
struct SolverContext {
    const Mesh* mesh = nullptr;
    SolverConfig cfg;
    NodeSet ns;
    std::vector<MetricSet> metrics;
    std::vector<FaceMetric> mortar_parent_fm;
    std::vector<std::array<FaceMetric, 4>> mortar_child_fm;

    NodeSet quad;                                  // RHS evaluation grid
    bool same_grid = true;                         // quad == solution grid
    std::vector<double> to_quad;                   // (quad x ns) transfer
    std::array<std::vector<double>, 2> restrict_half;  // parent->child half, on quad
    std::array<std::vector<double>, 2> project_half;   // child->parent L2, on quad
};

SolverContext make_solver_context(const Mesh& mesh, const SolverConfig& cfg);

MeshState constant_state(const SolverContext& ctx, const EulerPrimitive& prim);

// Numerical fluxes exchanged across one mortar: child-side values at child
// face nodes (outward from the child) and the parent-side L2 projection
// (outward from the parent), all on the active quadrature face grid.
struct MortarFluxes {
    std::array<std::array<Grid2, 5>, 4> child;
    std::array<Grid2, 5> parent;
};
MortarFluxes mortar_surface_exchange(const SolverContext& ctx, int mortar_index,
                                     const MeshState& states);

// dU/dt including the 1/J factor.
MeshState semidiscrete_rhs(const SolverContext& ctx, const MeshState& states);

struct AdvanceResult {
    MeshState states;
    double max_density_dev = 0.0;  // max |rho - freestream rho| over [0, T]
    int steps = 0;
    double dt = 0.0;
};

// Five-stage fourth-order low-storage explicit scheme; dt frozen from the
// initial state; throws BlowUpError on NaN or nonpositive density/pressure.
AdvanceResult rk_advance(const SolverContext& ctx, MeshState states, double final_time);

}  // namespace fsp
