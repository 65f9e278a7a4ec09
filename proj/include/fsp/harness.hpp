#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include "fsp/solver.hpp"

namespace fsp {

// Configuration problems carry the offending file:line or flag in the message.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One experiment description, filled from a flat `key = value` file and/or
// command-line flags. Defaults reproduce the standard study setup.
struct RunConfig {
    // mesh
    int K = 2;
    std::vector<int> refine_set = {0};
    double amplitude = 0.05;
    bool extruded = false;
    int Ng = 4;
    // solver
    int N = 4;
    NodeKind node_kind = NodeKind::gauss;
    double cfl = 0.5;
    double final_time = 0.5;
    int M = -1;  // overintegration degree; -1 = default (2N)
    MetricStrategy strategy = MetricStrategy::curl_form;
    EulerPrimitive freestream;  // (0.7, 0.2, 0.3, -0.4, 1.0)
    // reporting
    std::string output_path;
    unsigned seed = 2024;
    // sweep ranges
    int n_min = 1, n_max = 8;
    int ng_min = 1, ng_max = 4;
    std::vector<MetricStrategy> sweep_strategies = {MetricStrategy::curl_form};
    std::vector<NodeKind> sweep_node_kinds = {NodeKind::gauss};
};

// Applies one setting; `location` names the source, e.g. "run.cfg:3" or
// "flag --N". Throws ConfigError for unknown keys or unparsable values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& location);

// Parses the flat text format (UTF-8, one `key = value` per line, `#`
// comments) on top of the defaults. Does not validate.
RunConfig parse_config_text(const std::string& text, const std::string& source_name);

// Checks the documented invariants (N >= 1, Ng >= 1, positive freestream
// density and pressure, sane ranges); throws ConfigError.
void validate_config(const RunConfig& cfg);

// The standard study meshes: unit-cube lattice, phased trigonometric
// deformation with phases (0.9, 0.4, 1.7) breaking half-period alignment.
MeshSpec mesh_spec_from(const RunConfig& cfg);
std::string mesh_kind_name(const RunConfig& cfg);  // mortar | conforming | extruded

struct FreestreamReport {
    std::string mesh_kind;
    NodeKind node_kind = NodeKind::gauss;
    MetricStrategy strategy = MetricStrategy::curl_form;
    int N = 0, Ng = 0, M = 0;
    double max_density_error = 0.0;
    double condv_max = 0.0;
    double condf_max = 0.0;
    int steps = 0;
    double seconds = 0.0;
    bool failed = false;
    std::string note;
};

// Builds the mesh and metrics, checks the residuals, advances the exact
// freestream to T, and reports the maxima. Throws BlowUpError on blow-up.
FreestreamReport run_freestream(const RunConfig& cfg);

std::string freestream_csv_header();
std::string freestream_csv_row(const FreestreamReport& r);

// Full cartesian sweep over (strategy, Ng, N, node kind), rows sorted by
// (strategy, Ng, N); a failed run yields a `nan` row plus a comment line and
// the sweep continues.
std::string sweep_csv(const RunConfig& cfg);

// Per-element condition V and per-face condition F rows, CSV columns
// `kind,id,strategy,residual`. Ids are e<i> (element), c<i> (conforming
// face), m<i> (mortar). any_fail is set when a residual exceeds
// 1e-12 x metric scale.
std::string check_metrics_csv(const RunConfig& cfg, bool* any_fail);

struct CheckReport {
    std::string text;
    bool any_fail = false;
};

CheckReport watertight_check(const RunConfig& cfg);

// Random product-interpolation mismatch demonstration at the configured N:
// full-degree input pairs must alias (mismatch > 1e-6 after unit-max
// normalization), low-degree pairs must restrict exactly (<= 1e-13).
CheckReport appendix_demo(const RunConfig& cfg);

}  // namespace fsp
