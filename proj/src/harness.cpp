#include "fsp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>

namespace fsp {
namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& value, const std::string& location, const std::string& key) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(location + ": invalid integer '" + value + "' for key '" + key + "'");
    return static_cast<int>(v);
}

double parse_double(const std::string& value, const std::string& location,
                    const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(location + ": invalid number '" + value + "' for key '" + key + "'");
    return v;
}

bool parse_bool(const std::string& value, const std::string& location, const std::string& key) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError(location + ": invalid boolean '" + value + "' for key '" + key + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& value, const std::string& location,
                                const std::string& key) {
    if (trim(value) == "none") return {};
    std::vector<int> out;
    for (const std::string& item : split_list(value)) out.push_back(parse_int(item, location, key));
    return out;
}

SolverConfig solver_config_from(const RunConfig& cfg) {
    SolverConfig sc;
    sc.N = cfg.N;
    sc.node_kind = cfg.node_kind;
    sc.cfl = cfg.cfl;
    sc.final_time = cfg.final_time;
    sc.strategy = cfg.strategy;
    sc.M = cfg.M;
    sc.freestream = cfg.freestream;
    return sc;
}

// Residual evaluation shared by check-metrics and the freestream reports so
// both emit bit-identical numbers.
double condition_v_max(const std::vector<MetricSet>& metrics, const NodeSet& ns) {
    double worst = 0.0;
    for (const MetricSet& ms : metrics) worst = std::max(worst, condition_v_residual(ms, ns));
    return worst;
}

FaceMetric conforming_face_metric(const Mesh& mesh, const ConformingFace& cf, const NodeSet& ns,
                                  int face_interp) {
    return face_metrics_parent(element_face(mesh, cf.left_elem, cf.left_side), ns,
                               face_axis(cf.left_side), face_interp);
}

double condition_f_max(const Mesh& mesh, const std::vector<MetricSet>& metrics,
                       const std::vector<FaceMetric>& mortar_fm, const NodeSet& ns,
                       int face_interp) {
    double worst = 0.0;
    for (const ConformingFace& cf : mesh.conforming) {
        const FaceMetric fm = conforming_face_metric(mesh, cf, ns, face_interp);
        worst = std::max(worst, condition_f_residual(mesh, cf, metrics, fm, ns));
    }
    for (size_t mi = 0; mi < mesh.mortars.size(); ++mi)
        worst = std::max(worst,
                         condition_f_residual(mesh, mesh.mortars[mi], metrics, mortar_fm[mi], ns));
    return worst;
}

FreestreamReport run_freestream_impl(const RunConfig& cfg, bool tolerate_blowup) {
    const auto t0 = std::chrono::steady_clock::now();
    const Mesh mesh = build_mesh(mesh_spec_from(cfg));
    const SolverContext ctx = make_solver_context(mesh, solver_config_from(cfg));

    FreestreamReport rep;
    rep.mesh_kind = mesh_kind_name(cfg);
    rep.node_kind = cfg.node_kind;
    rep.strategy = cfg.strategy;
    rep.N = cfg.N;
    rep.Ng = cfg.Ng;
    rep.M = ctx.metrics.front().build_degree;
    rep.condv_max = condition_v_max(ctx.metrics, ctx.ns);
    const int face_interp =
        cfg.strategy == MetricStrategy::overintegrated ? ctx.metrics.front().build_degree : -1;
    rep.condf_max = condition_f_max(mesh, ctx.metrics, ctx.mortar_parent_fm, ctx.ns, face_interp);

    try {
        const AdvanceResult adv =
            rk_advance(ctx, constant_state(ctx, cfg.freestream), cfg.final_time);
        rep.max_density_error = adv.max_density_dev;
        rep.steps = adv.steps;
    } catch (const BlowUpError& e) {
        if (!tolerate_blowup) throw;
        rep.failed = true;
        rep.note = e.what();
        rep.max_density_error = std::numeric_limits<double>::quiet_NaN();
        rep.steps = 0;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& location) {
    const auto enum_error = [&](const std::exception& e) {
        return ConfigError(location + ": " + e.what() + " for key '" + key + "'");
    };
    if (key == "K") {
        cfg.K = parse_int(value, location, key);
    } else if (key == "refine") {
        cfg.refine_set = parse_int_list(value, location, key);
    } else if (key == "amplitude") {
        cfg.amplitude = parse_double(value, location, key);
    } else if (key == "extruded") {
        cfg.extruded = parse_bool(value, location, key);
    } else if (key == "Ng") {
        cfg.Ng = parse_int(value, location, key);
    } else if (key == "N") {
        cfg.N = parse_int(value, location, key);
    } else if (key == "node_kind") {
        try {
            cfg.node_kind = node_kind_from_string(value);
        } catch (const std::exception& e) {
            throw enum_error(e);
        }
    } else if (key == "cfl") {
        cfg.cfl = parse_double(value, location, key);
    } else if (key == "T") {
        cfg.final_time = parse_double(value, location, key);
    } else if (key == "M") {
        cfg.M = parse_int(value, location, key);
    } else if (key == "strategy") {
        try {
            cfg.strategy = strategy_from_string(value);
        } catch (const std::exception& e) {
            throw enum_error(e);
        }
    } else if (key == "rho") {
        cfg.freestream.rho = parse_double(value, location, key);
    } else if (key == "v1") {
        cfg.freestream.v1 = parse_double(value, location, key);
    } else if (key == "v2") {
        cfg.freestream.v2 = parse_double(value, location, key);
    } else if (key == "v3") {
        cfg.freestream.v3 = parse_double(value, location, key);
    } else if (key == "p") {
        cfg.freestream.p = parse_double(value, location, key);
    } else if (key == "output") {
        cfg.output_path = value;
    } else if (key == "seed") {
        cfg.seed = static_cast<unsigned>(parse_int(value, location, key));
    } else if (key == "N_min") {
        cfg.n_min = parse_int(value, location, key);
    } else if (key == "N_max") {
        cfg.n_max = parse_int(value, location, key);
    } else if (key == "Ng_min") {
        cfg.ng_min = parse_int(value, location, key);
    } else if (key == "Ng_max") {
        cfg.ng_max = parse_int(value, location, key);
    } else if (key == "strategies") {
        cfg.sweep_strategies.clear();
        for (const std::string& item : split_list(value)) {
            try {
                cfg.sweep_strategies.push_back(strategy_from_string(item));
            } catch (const std::exception& e) {
                throw enum_error(e);
            }
        }
    } else if (key == "node_kinds") {
        cfg.sweep_node_kinds.clear();
        for (const std::string& item : split_list(value)) {
            try {
                cfg.sweep_node_kinds.push_back(node_kind_from_string(item));
            } catch (const std::exception& e) {
                throw enum_error(e);
            }
        }
    } else {
        throw ConfigError(location + ": unknown key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        char loc[256];
        std::snprintf(loc, sizeof(loc), "%s:%d", source_name.c_str(), lineno);
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(std::string(loc) + ": expected 'key = value', got '" + line + "'");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), loc);
    }
    return cfg;
}

void validate_config(const RunConfig& cfg) {
    const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (cfg.K < 2) fail("K must be at least 2");
    if (cfg.Ng < 1) fail("Ng must be at least 1");
    if (cfg.N < 1) fail("N must be at least 1");
    if (!(cfg.cfl > 0.0)) fail("cfl must be positive");
    if (!(cfg.final_time >= 0.0)) fail("T must be nonnegative");
    if (cfg.M != -1 && cfg.M < cfg.N) fail("M must be -1 (default) or at least N");
    if (!(cfg.freestream.rho > 0.0)) fail("freestream density must be positive");
    if (!(cfg.freestream.p > 0.0)) fail("freestream pressure must be positive");
    if (cfg.n_min < 1 || cfg.n_min > cfg.n_max) fail("sweep range requires 1 <= N_min <= N_max");
    if (cfg.ng_min < 1 || cfg.ng_min > cfg.ng_max)
        fail("sweep range requires 1 <= Ng_min <= Ng_max");
    if (cfg.sweep_strategies.empty()) fail("strategies must not be empty");
    if (cfg.sweep_node_kinds.empty()) fail("node_kinds must not be empty");
}

MeshSpec mesh_spec_from(const RunConfig& cfg) {
    MeshSpec spec;
    spec.K = cfg.K;
    spec.refine_set = cfg.refine_set;
    spec.Ng = cfg.Ng;
    spec.extruded = cfg.extruded;
    spec.deform.amplitude = cfg.amplitude;
    spec.deform.wavenumber = {1, 1, 1};
    // Phases keep the deformation off half-period face alignment, so metric
    // products reach full polynomial degree on every interface.
    spec.deform.phase = {0.9, 0.4, 1.7};
    spec.deform.extruded = cfg.extruded;
    return spec;
}

std::string mesh_kind_name(const RunConfig& cfg) {
    if (cfg.extruded) return "extruded";
    return cfg.refine_set.empty() ? "conforming" : "mortar";
}

FreestreamReport run_freestream(const RunConfig& cfg) { return run_freestream_impl(cfg, false); }

std::string freestream_csv_header() {
    return "mesh,node_kind,strategy,N,Ng,M,max_density_err,condV,condF,steps,seconds\n";
}

std::string freestream_csv_row(const FreestreamReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%d,%.6e,%.6e,%.6e,%d,%.3f\n",
                  r.mesh_kind.c_str(), to_string(r.node_kind).c_str(),
                  to_string(r.strategy).c_str(), r.N, r.Ng, r.M, r.max_density_error, r.condv_max,
                  r.condf_max, r.steps, r.seconds);
    return buf;
}

std::string sweep_csv(const RunConfig& cfg) {
    std::vector<MetricStrategy> strategies = cfg.sweep_strategies;
    std::sort(strategies.begin(), strategies.end());
    strategies.erase(std::unique(strategies.begin(), strategies.end()), strategies.end());
    std::vector<NodeKind> kinds = cfg.sweep_node_kinds;
    std::sort(kinds.begin(), kinds.end());
    kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());

    std::string out = freestream_csv_header();
    for (MetricStrategy strategy : strategies)
        for (int ng = cfg.ng_min; ng <= cfg.ng_max; ++ng)
            for (int n = cfg.n_min; n <= cfg.n_max; ++n)
                for (NodeKind kind : kinds) {
                    RunConfig sub = cfg;
                    sub.strategy = strategy;
                    sub.Ng = ng;
                    sub.N = n;
                    sub.node_kind = kind;
                    FreestreamReport rep;
                    try {
                        rep = run_freestream_impl(sub, true);
                    } catch (const std::exception& e) {
                        rep.mesh_kind = mesh_kind_name(sub);
                        rep.node_kind = kind;
                        rep.strategy = strategy;
                        rep.N = n;
                        rep.Ng = ng;
                        rep.M = -1;
                        rep.max_density_error = std::numeric_limits<double>::quiet_NaN();
                        rep.condv_max = std::numeric_limits<double>::quiet_NaN();
                        rep.condf_max = std::numeric_limits<double>::quiet_NaN();
                        rep.failed = true;
                        rep.note = e.what();
                    }
                    out += freestream_csv_row(rep);
                    if (rep.failed) {
                        char buf[256];
                        std::snprintf(buf, sizeof(buf), "# failed %s Ng=%d N=%d: %s\n",
                                      to_string(strategy).c_str(), ng, n, rep.note.c_str());
                        out += buf;
                    }
                }
    return out;
}

std::string check_metrics_csv(const RunConfig& cfg, bool* any_fail) {
    const Mesh mesh = build_mesh(mesh_spec_from(cfg));
    const NodeSet ns = build_node_set(cfg.node_kind, cfg.N);
    const std::vector<MetricSet> metrics = build_metrics(mesh, ns, cfg.strategy, cfg.M);
    const int face_interp = cfg.strategy == MetricStrategy::overintegrated
                                ? metrics.front().build_degree
                                : -1;
    bool fail = false;
    std::string out = "kind,id,strategy,residual\n";
    char buf[160];
    const std::string strat = to_string(cfg.strategy);
    for (size_t e = 0; e < metrics.size(); ++e) {
        const double r = condition_v_residual(metrics[e], ns);
        if (r > 1e-12 * metric_scale(metrics[e])) fail = true;
        std::snprintf(buf, sizeof(buf), "condV,e%zu,%s,%.6e\n", e, strat.c_str(), r);
        out += buf;
    }
    for (size_t ci = 0; ci < mesh.conforming.size(); ++ci) {
        const ConformingFace& cf = mesh.conforming[ci];
        const FaceMetric fm = conforming_face_metric(mesh, cf, ns, face_interp);
        const double r = condition_f_residual(mesh, cf, metrics, fm, ns);
        const double scale =
            std::max(metric_scale(metrics[static_cast<size_t>(cf.left_elem)]),
                     metric_scale(metrics[static_cast<size_t>(cf.right_elem)]));
        if (r > 1e-12 * scale) fail = true;
        std::snprintf(buf, sizeof(buf), "condF,c%zu,%s,%.6e\n", ci, strat.c_str(), r);
        out += buf;
    }
    for (size_t mi = 0; mi < mesh.mortars.size(); ++mi) {
        const MortarFace& mortar = mesh.mortars[mi];
        const FaceMetric pfm = face_metrics_parent(
            element_face(mesh, mortar.parent_elem, mortar.parent_side), ns,
            face_axis(mortar.parent_side), face_interp);
        const double r = condition_f_residual(mesh, mortar, metrics, pfm, ns);
        double scale = metric_scale(metrics[static_cast<size_t>(mortar.parent_elem)]);
        for (const MortarChild& mc : mortar.children)
            scale = std::max(scale, metric_scale(metrics[static_cast<size_t>(mc.elem)]));
        if (r > 1e-12 * scale) fail = true;
        std::snprintf(buf, sizeof(buf), "condF,m%zu,%s,%.6e\n", mi, strat.c_str(), r);
        out += buf;
    }
    if (any_fail) *any_fail = fail;
    return out;
}

CheckReport watertight_check(const RunConfig& cfg) {
    const Mesh mesh = build_mesh(mesh_spec_from(cfg));
    const TopologyReport topo = validate_topology(mesh);
    CheckReport rep;
    rep.any_fail = topo.watertight_gap > 1e-12;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "watertight %s (gap=%.6e %s 1e-12)\n",
                  rep.any_fail ? "FAIL" : "PASS", topo.watertight_gap,
                  rep.any_fail ? ">" : "<=");
    rep.text = topo.summary() + buf;
    return rep;
}

CheckReport appendix_demo(const RunConfig& cfg) {
    const NodeSet ns = build_node_set(cfg.node_kind, cfg.N);
    std::mt19937 gen(cfg.seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const int n1 = ns.size();

    const auto normalize = [](std::vector<double>& vals) {
        double m = 0.0;
        for (double v : vals) m = std::max(m, std::abs(v));
        if (m > 0.0)
            for (double& v : vals) v /= m;
    };

    // Full-degree pair: random nodal data is a generic degree-N polynomial.
    std::vector<double> uf(n1), vf(n1);
    for (double& x : uf) x = coef(gen);
    for (double& x : vf) x = coef(gen);
    normalize(uf);
    normalize(vf);
    const double full = product_interpolation_mismatch(uf, vf, ns).max_mismatch;

    // Low-degree pair with deg(U) + deg(V) <= N: sampled from random
    // coefficient polynomials of the split degrees.
    const int du = cfg.N / 2;
    const int dv = cfg.N - du;
    const auto sample_poly = [&](int deg) {
        std::vector<double> c(static_cast<size_t>(deg) + 1);
        for (double& x : c) x = coef(gen);
        std::vector<double> vals(static_cast<size_t>(n1));
        for (int j = 0; j < n1; ++j) {
            double acc = 0.0;
            for (int k = deg; k >= 0; --k) acc = acc * ns.nodes[j] + c[static_cast<size_t>(k)];
            vals[static_cast<size_t>(j)] = acc;
        }
        return vals;
    };
    std::vector<double> ul = sample_poly(du), vl = sample_poly(dv);
    normalize(ul);
    normalize(vl);
    const double low = product_interpolation_mismatch(ul, vl, ns).max_mismatch;

    CheckReport rep;
    const bool full_ok = full > 1e-6;
    const bool low_ok = low <= 1e-13;
    rep.any_fail = !(full_ok && low_ok);
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "appendix-demo N=%d: full-degree mismatch %.6e > 1e-6: %s\n"
                  "appendix-demo N=%d: low-degree (%d+%d <= %d) mismatch %.6e <= 1e-13: %s\n",
                  cfg.N, full, full_ok ? "PASS" : "FAIL", cfg.N, du, dv, cfg.N, low,
                  low_ok ? "PASS" : "FAIL");
    rep.text = buf;
    return rep;
}

}  // namespace fsp
