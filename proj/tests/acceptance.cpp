// Acceptance gate: drives every stated criterion at its stated tolerance and
// prints exactly one PASS/FAIL line per criterion. Exit status 0 only if all
// criteria hold.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fsp/harness.hpp"

using namespace fsp;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::map<std::string, FreestreamReport> g_cache;

RunConfig base_config() { return RunConfig{}; }

SolverConfig solver_config(const RunConfig& cfg) {
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

const FreestreamReport& report_for(const RunConfig& cfg) {
    char key[160];
    std::snprintf(key, sizeof(key), "%s|%s|%s|N%d|Ng%d|M%d", mesh_kind_name(cfg).c_str(),
                  to_string(cfg.node_kind).c_str(), to_string(cfg.strategy).c_str(), cfg.N, cfg.Ng,
                  cfg.M);
    const auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
    FreestreamReport rep;
    try {
        rep = run_freestream(cfg);
    } catch (const BlowUpError& e) {
        rep.failed = true;
        rep.note = e.what();
        rep.max_density_error = std::numeric_limits<double>::infinity();
    }
    return g_cache.emplace(key, rep).first->second;
}

// Criteria 1 and 10: the (Ng, N) dichotomy on the refined deformed mesh.
Outcome dichotomy(NodeKind kind) {
    Outcome out;
    double worst_pass = 0.0, best_fail = std::numeric_limits<double>::infinity();
    double slowest = 0.0;
    const auto run = [&](int ng, int n) -> const FreestreamReport& {
        RunConfig cfg = base_config();
        cfg.node_kind = kind;
        cfg.Ng = ng;
        cfg.N = n;
        const FreestreamReport& rep = report_for(cfg);
        slowest = std::max(slowest, rep.seconds);
        if (rep.seconds >= 60.0 || rep.failed) out.pass = false;
        return rep;
    };
    for (int n = 2; n <= 8; ++n) worst_pass = std::max(worst_pass, run(1, n).max_density_error);
    for (int n = 4; n <= 8; ++n) worst_pass = std::max(worst_pass, run(2, n).max_density_error);
    best_fail = std::min(best_fail, run(4, 4).max_density_error);
    best_fail = std::min(best_fail, run(3, 4).max_density_error);
    out.pass = out.pass && worst_pass <= 1e-11 && best_fail >= 1e-9;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "N >= 2Ng rows max err %.2e <= 1e-11, (Ng=4,N=4)/(Ng=3,N=4) min err %.2e >= "
                  "1e-9, slowest run %.1fs < 60s",
                  worst_pass, best_fail, slowest);
    out.detail = buf;
    return out;
}

Outcome extrusion() {
    Outcome out;
    RunConfig cfg = base_config();
    cfg.extruded = true;
    cfg.Ng = 4;
    cfg.N = 4;
    const double good = report_for(cfg).max_density_error;
    cfg.N = 3;
    const double bad = report_for(cfg).max_density_error;
    out.pass = good <= 1e-11 && bad >= 1e-9;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "(Ng=4,N=4) err %.2e <= 1e-11, (Ng=4,N=3) err %.2e >= 1e-9",
                  good, bad);
    out.detail = buf;
    return out;
}

// Criteria 3 and 10: the repair-strategy catalog at (Ng=4, N=4).
Outcome catalog(NodeKind kind) {
    Outcome out;
    const auto err_of = [&](MetricStrategy strategy, int ng, int m, bool conforming) {
        RunConfig cfg = base_config();
        cfg.node_kind = kind;
        cfg.strategy = strategy;
        cfg.Ng = ng;
        cfg.M = m;
        if (conforming) cfg.refine_set.clear();
        const FreestreamReport& rep = report_for(cfg);
        return rep.failed ? std::numeric_limits<double>::infinity() : rep.max_density_error;
    };
    const double inherited = err_of(MetricStrategy::parent_inherited, 4, -1, false);
    const double overint = err_of(MetricStrategy::overintegrated, 4, 8, false);
    const double conforming = err_of(MetricStrategy::curl_form, 4, -1, true);
    const double bilinear = err_of(MetricStrategy::curl_form, 1, -1, false);
    const double child_local = err_of(MetricStrategy::curl_form, 4, -1, false);
    out.pass = inherited <= 1e-11 && overint <= 1e-11 && conforming <= 1e-11 &&
               bilinear <= 1e-11 && child_local >= 1e-9;
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "inherited %.2e, overintegrated(M=8) %.2e, conforming %.2e, bilinear %.2e all "
                  "<= 1e-11; child-local %.2e >= 1e-9",
                  inherited, overint, conforming, bilinear, child_local);
    out.detail = buf;
    return out;
}

Outcome spectral_decay() {
    Outcome out;
    double err[4];
    for (int n = 4; n <= 7; ++n) {
        RunConfig cfg = base_config();
        cfg.Ng = 4;
        cfg.N = n;
        err[n - 4] = report_for(cfg).max_density_error;
    }
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) min_ratio = std::min(min_ratio, err[i] / err[i + 1]);
    out.pass = min_ratio >= 3.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "Ng=4 errs N=4..7: %.2e %.2e %.2e %.2e, min per-N ratio %.2f >= 3", err[0],
                  err[1], err[2], err[3], min_ratio);
    out.detail = buf;
    return out;
}

Outcome condition_v() {
    Outcome out;
    double worst_curl_ratio = 0.0;  // residual / (1e-12 * scale), must stay <= 1
    struct SpecDesc {
        int ng;
        bool conforming, extruded;
    };
    const std::vector<SpecDesc> meshes = {{1, false, false}, {2, false, false}, {3, false, false},
                                          {4, false, false}, {4, true, false},  {4, false, true}};
    for (const SpecDesc& sd : meshes)
        for (NodeKind kind : {NodeKind::gauss, NodeKind::lobatto}) {
            RunConfig cfg = base_config();
            cfg.Ng = sd.ng;
            cfg.node_kind = kind;
            if (sd.conforming) cfg.refine_set.clear();
            cfg.extruded = sd.extruded;
            const Mesh mesh = build_mesh(mesh_spec_from(cfg));
            const NodeSet ns = build_node_set(kind, cfg.N);
            const auto metrics = build_metrics(mesh, ns, MetricStrategy::curl_form, -1);
            for (const MetricSet& ms : metrics) {
                const double ratio =
                    condition_v_residual(ms, ns) / (1e-12 * metric_scale(ms));
                worst_curl_ratio = std::max(worst_curl_ratio, ratio);
            }
        }

    double best_cross_ratio = 0.0;  // residual / (1e-8 * scale), need >= 1 somewhere
    {
        RunConfig cfg = base_config();
        const Mesh mesh = build_mesh(mesh_spec_from(cfg));
        const NodeSet ns = build_node_set(NodeKind::gauss, 4);
        const auto metrics = build_metrics(mesh, ns, MetricStrategy::cross_product, -1);
        for (const MetricSet& ms : metrics) {
            const double ratio = condition_v_residual(ms, ns) / (1e-8 * metric_scale(ms));
            best_cross_ratio = std::max(best_cross_ratio, ratio);
        }
    }
    out.pass = worst_curl_ratio <= 1.0 && best_cross_ratio >= 1.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "curl residual <= %.3f x (1e-12 scale) on all elements/meshes/node kinds; "
                  "cross residual reaches %.1f x (1e-8 scale)",
                  worst_curl_ratio, best_cross_ratio);
    out.detail = buf;
    return out;
}

double max_abs(const MeshState& states) {
    double m = 0.0;
    for (const auto& es : states)
        for (const auto& g : es.comp)
            for (double x : g.v) m = std::max(m, std::abs(x));
    return m;
}

Outcome linkage() {
    Outcome out;
    // Configurations whose residual suites pass must have a vanishing
    // constant-state right-hand side.
    struct Setup {
        MetricStrategy strategy;
        int ng, m;
        bool conforming;
    };
    const std::vector<Setup> catalog = {{MetricStrategy::parent_inherited, 4, -1, false},
                                        {MetricStrategy::overintegrated, 4, 8, false},
                                        {MetricStrategy::curl_form, 4, -1, true},
                                        {MetricStrategy::curl_form, 1, -1, false},
                                        {MetricStrategy::curl_form, 2, -1, false}};
    double worst_rhs = 0.0;
    int qualifying = 0;
    for (const Setup& s : catalog) {
        RunConfig cfg = base_config();
        cfg.strategy = s.strategy;
        cfg.Ng = s.ng;
        cfg.M = s.m;
        if (s.conforming) cfg.refine_set.clear();
        bool residual_fail = true;
        check_metrics_csv(cfg, &residual_fail);
        if (residual_fail) continue;  // implication is vacuous for this setup
        ++qualifying;
        const Mesh mesh = build_mesh(mesh_spec_from(cfg));
        const SolverContext ctx = make_solver_context(mesh, solver_config(cfg));
        worst_rhs =
            std::max(worst_rhs, max_abs(semidiscrete_rhs(ctx, constant_state(ctx, cfg.freestream))));
    }
    if (qualifying < 4 || worst_rhs > 1e-11) out.pass = false;

    // Where condition F fails on a mortar, the neighboring elements must feel
    // it in the right-hand side.
    double weakest_adjacent = std::numeric_limits<double>::infinity();
    {
        RunConfig cfg = base_config();  // child-local curl at Ng = N = 4
        const Mesh mesh = build_mesh(mesh_spec_from(cfg));
        const SolverContext ctx = make_solver_context(mesh, solver_config(cfg));
        const NodeSet& ns = ctx.ns;
        const MeshState rhs = semidiscrete_rhs(ctx, constant_state(ctx, cfg.freestream));
        int violated = 0;
        for (size_t mi = 0; mi < mesh.mortars.size(); ++mi) {
            const MortarFace& mortar = mesh.mortars[mi];
            const double fres = condition_f_residual(mesh, mortar, ctx.metrics,
                                                     ctx.mortar_parent_fm[mi], ns);
            double scale = metric_scale(ctx.metrics[static_cast<size_t>(mortar.parent_elem)]);
            for (const MortarChild& mc : mortar.children)
                scale = std::max(scale, metric_scale(ctx.metrics[static_cast<size_t>(mc.elem)]));
            if (fres <= 1e-12 * scale) continue;
            ++violated;
            double adjacent = 0.0;
            const auto note = [&](int e) {
                for (const auto& g : rhs[static_cast<size_t>(e)].comp)
                    for (double x : g.v) adjacent = std::max(adjacent, std::abs(x));
            };
            note(mortar.parent_elem);
            for (const MortarChild& mc : mortar.children) note(mc.elem);
            weakest_adjacent = std::min(weakest_adjacent, adjacent);
        }
        if (violated == 0 || weakest_adjacent <= 1e-10) out.pass = false;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%d residual-passing setups have max |RHS| %.2e <= 1e-11; condF-violating "
                  "mortars all have adjacent |RHS| >= %.2e > 1e-10",
                  qualifying, worst_rhs, weakest_adjacent);
    out.detail = buf;
    return out;
}

Outcome flux_difference_identity() {
    Outcome out;
    const NodeSet ns = build_node_set(NodeKind::gauss, 4);
    const DiffMatrix dm = differentiation_matrix(ns);
    const State5 c = conservative_state(EulerPrimitive{});
    const auto f = euler_physical_flux(c);
    double worst = 0.0;
    for (int seed = 1; seed <= 5; ++seed) {
        DeformSpec d;
        d.amplitude = 0.04 + 0.01 * seed;
        d.wavenumber = {1, 1, 1};
        d.phase = {0.9 + 0.3 * seed, 0.4 + 0.1 * seed, 1.7};
        Box box{{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}};
        const ElementMapping m = sample_analytic_mapping(d, box, 4, NodeKind::lobatto);
        const MetricSet ms = metrics_cross_product(covariant_basis(m, ns));
        ElementState es;
        for (int comp = 0; comp < 5; ++comp) {
            es.comp[comp] = Grid3(ns.size(), ns.size(), ns.size());
            std::fill(es.comp[comp].v.begin(), es.comp[comp].v.end(), c[comp]);
        }
        const auto fd = flux_difference_volume(es, ms, ns);
        for (int comp = 0; comp < 5; ++comp) {
            Grid3 expected(ns.size(), ns.size(), ns.size());
            for (int n = 0; n < 3; ++n) {
                const Grid3 t0 = apply_diff(ms.ja[0][n], dm, 0);
                const Grid3 t1 = apply_diff(ms.ja[1][n], dm, 1);
                const Grid3 t2 = apply_diff(ms.ja[2][n], dm, 2);
                for (size_t a = 0; a < expected.size(); ++a)
                    expected.v[a] += f[n][comp] * (t0.v[a] + t1.v[a] + t2.v[a]);
            }
            for (size_t a = 0; a < expected.size(); ++a)
                worst = std::max(worst, std::abs(fd[comp].v[a] - expected.v[a]));
        }
    }
    out.pass = worst <= 1e-12;
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "max |flux-difference - metric-divergence contraction| %.2e <= 1e-12 on 5 "
                  "random curved elements",
                  worst);
    out.detail = buf;
    return out;
}

Outcome appendix_property() {
    Outcome out;
    std::mt19937 gen(424242);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double worst_exact = 0.0, weakest_alias = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= 4; ++n) {
        const NodeSet ns = build_node_set(NodeKind::gauss, n);
        const int n1 = ns.size();
        // every degree split with deg(U) + deg(V) <= N restricts exactly
        for (int du = 0; du <= n; ++du) {
            const int dv = n - du;
            const auto sample = [&](int deg) {
                std::vector<double> cs(static_cast<size_t>(deg) + 1);
                for (double& x : cs) x = coef(gen);
                std::vector<double> vals(static_cast<size_t>(n1));
                for (int j = 0; j < n1; ++j) {
                    double acc = 0.0;
                    for (int k = deg; k >= 0; --k)
                        acc = acc * ns.nodes[j] + cs[static_cast<size_t>(k)];
                    vals[static_cast<size_t>(j)] = acc;
                }
                return vals;
            };
            const double mm =
                product_interpolation_mismatch(sample(du), sample(dv), ns).max_mismatch;
            worst_exact = std::max(worst_exact, mm);
        }
        // 20 random full-degree pairs, inputs normalized to unit max
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> u(static_cast<size_t>(n1)), v(static_cast<size_t>(n1));
            for (double& x : u) x = coef(gen);
            for (double& x : v) x = coef(gen);
            const auto normalize = [](std::vector<double>& vals) {
                double m = 0.0;
                for (double x : vals) m = std::max(m, std::abs(x));
                for (double& x : vals) x /= m;
            };
            normalize(u);
            normalize(v);
            const double mm = product_interpolation_mismatch(u, v, ns).max_mismatch;
            weakest_alias = std::min(weakest_alias, mm);
        }
    }
    out.pass = worst_exact <= 1e-13 && weakest_alias > 1e-6;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "low-degree products mismatch <= %.2e (tol 1e-13); full-degree pairs mismatch "
                  ">= %.2e > 1e-6 (20 pairs each, N = 1..4)",
                  worst_exact, weakest_alias);
    out.detail = buf;
    return out;
}

Outcome mortar_conservation() {
    Outcome out;
    RunConfig cfg = base_config();
    const Mesh mesh = build_mesh(mesh_spec_from(cfg));
    const SolverContext ctx = make_solver_context(mesh, solver_config(cfg));
    const NodeSet& ns = ctx.ns;
    const NodeSet dense = build_node_set(NodeKind::gauss, ns.degree + 3);
    const auto integral = [&](const Grid2& data, int i, int j, const FaceAffine& map) {
        double total = 0.0;
        std::vector<double> row(static_cast<size_t>(ns.size()));
        std::vector<double> col(static_cast<size_t>(ns.size()));
        std::vector<double> unit(static_cast<size_t>(ns.size()), 0.0);
        for (int gp = 0; gp < dense.size(); ++gp)
            for (int gq = 0; gq < dense.size(); ++gq) {
                const double t = dense.nodes[gp], u = dense.nodes[gq];
                for (int k = 0; k < ns.size(); ++k) {
                    for (int l = 0; l < ns.size(); ++l) row[static_cast<size_t>(l)] = data(k, l);
                    col[static_cast<size_t>(k)] = interpolate_at(ns, row, u);
                }
                const double value = interpolate_at(ns, col, t);
                unit[static_cast<size_t>(i)] = 1.0;
                const double phi_r =
                    interpolate_at(ns, unit, map.alpha[0] * t + map.offset[0]);
                unit[static_cast<size_t>(i)] = 0.0;
                unit[static_cast<size_t>(j)] = 1.0;
                const double phi_s =
                    interpolate_at(ns, unit, map.alpha[1] * u + map.offset[1]);
                unit[static_cast<size_t>(j)] = 0.0;
                total += dense.weights[gp] * dense.weights[gq] * value * phi_r * phi_s;
            }
        return total;
    };

    std::mt19937 gen(77);
    std::uniform_real_distribution<double> perturb(-0.01, 0.01);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        MeshState states = constant_state(ctx, cfg.freestream);
        for (auto& es : states)
            for (auto& g : es.comp)
                for (double& x : g.v) x += perturb(gen);
        const MortarFluxes fluxes = mortar_surface_exchange(ctx, 0, states);
        const MortarFace& mortar = mesh.mortars[0];
        const FaceAffine identity;
        for (int comp = 0; comp < 5; ++comp)
            for (int i = 0; i < ns.size(); ++i)
                for (int j = 0; j < ns.size(); ++j) {
                    const double parent_int = integral(fluxes.parent[comp], i, j, identity);
                    double child_sum = 0.0;
                    for (int q = 0; q < 4; ++q) {
                        const MortarChild& mc = mortar.children[q];
                        child_sum +=
                            integral(fluxes.child[q][comp], i, j, mc.submap) / (4.0 * mc.beta);
                    }
                    worst = std::max(worst, std::abs(parent_int + child_sum));
                }
    }
    out.pass = worst <= 1e-12;
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "parent projected flux vs weighted child integrals: max defect %.2e <= 1e-12 "
                  "(10 random fields, N=4)",
                  worst);
    out.detail = buf;
    return out;
}

}  // namespace

int main() {
    bool all_pass = true;
    const auto report = [&](int idx, const char* name, const Outcome& o) {
        std::printf("[%s] criterion %d: %s: %s\n", o.pass ? "PASS" : "FAIL", idx, name,
                    o.detail.c_str());
        if (!o.pass) all_pass = false;
        std::fflush(stdout);
    };

    report(1, "freestream dichotomy, gauss", dichotomy(NodeKind::gauss));
    report(2, "extruded-geometry condition", extrusion());
    report(3, "strategy catalog, gauss", catalog(NodeKind::gauss));
    report(4, "spectral decay of the violation", spectral_decay());
    report(5, "divergence-free metric residuals", condition_v());
    report(6, "face-residual / RHS linkage", linkage());
    report(7, "flux-differencing identity", flux_difference_identity());
    report(8, "product interpolation mismatch dichotomy", appendix_property());
    report(9, "mortar flux conservation", mortar_conservation());
    {
        const Outcome d = dichotomy(NodeKind::lobatto);
        const Outcome c = catalog(NodeKind::lobatto);
        Outcome combined;
        combined.pass = d.pass && c.pass;
        combined.detail = "dichotomy [" + d.detail + "]; catalog [" + c.detail + "]";
        report(10, "node-kind robustness, lobatto", combined);
    }

    std::printf("%s\n", all_pass ? "acceptance: all criteria passed"
                                 : "acceptance: at least one criterion FAILED");
    return all_pass ? 0 : 1;
}
