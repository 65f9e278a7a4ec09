#include "fsp/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fsp {

std::string to_string(NodeKind kind) {
    return kind == NodeKind::gauss ? "gauss" : "lobatto";
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "gauss") return NodeKind::gauss;
    if (s == "lobatto") return NodeKind::lobatto;
    throw std::invalid_argument("unknown node kind: " + s);
}

namespace {

// P_n(x) and P'_n(x) by the three-term recurrence.
struct LegendreEval {
    double p;
    double dp;
};

LegendreEval legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    double d0 = 0.0, d1 = 1.0;
    if (n == 0) return {p0, d0};
    for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        double d2 = d0 + (2.0 * k - 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    return {p1, d1};
}

// q(x) = P'_N(x) and its derivative; interior lobatto nodes are roots of q.
// P''_N from the Legendre ODE: (1-x^2) P'' = 2x P' - N(N+1) P.
LegendreEval legendre_deriv(int n, double x) {
    auto [p, dp] = legendre(n, x);
    double ddp = (2.0 * x * dp - n * (n + 1.0) * p) / (1.0 - x * x);
    return {dp, ddp};
}

double newton_root(double guess, auto&& f, const char* what) {
    double x = guess;
    for (int it = 0; it < 100; ++it) {
        auto [val, dval] = f(x);
        double step = val / dval;
        // Damping keeps iterates inside (-1,1) where the guesses start.
        while (std::abs(x - step) >= 1.0 && std::abs(step) > 1e-30) step *= 0.5;
        x -= step;
        if (std::abs(val) < 1e-15 && std::abs(step) < 1e-15) return x;
    }
    auto [val, dval] = f(x);
    if (std::abs(val) < 1e-13) return x;
    throw std::runtime_error(std::string("node iteration failed to converge: ") + what);
}

std::vector<double> barycentric_weights(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<double> w(n, 1.0);
    for (size_t j = 0; j < n; ++j)
        for (size_t i = 0; i < n; ++i)
            if (i != j) w[j] /= (x[j] - x[i]);
    return w;
}

}  // namespace

NodeSet build_node_set(NodeKind kind, int degree) {
    if (degree < 0) throw std::invalid_argument("node set degree must be nonnegative");
    if (kind == NodeKind::lobatto && degree < 1)
        throw std::invalid_argument("lobatto node set needs degree >= 1");

    const int n = degree + 1;
    NodeSet ns;
    ns.kind = kind;
    ns.degree = degree;
    ns.nodes.resize(n);
    ns.weights.resize(n);

    using std::numbers::pi;
    if (kind == NodeKind::gauss) {
        for (int j = 0; j < n; ++j) {
            // Chebyshev-like initial guess for the j-th root of P_{N+1}.
            double guess = -std::cos(pi * (2.0 * j + 1.0) / (2.0 * n));
            double x = newton_root(guess, [&](double t) {
                auto e = legendre(n, t);
                return e;
            }, "gauss");
            auto [p, dp] = legendre(n, x);
            (void)p;
            ns.nodes[j] = x;
            ns.weights[j] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    } else {
        ns.nodes[0] = -1.0;
        ns.nodes[degree] = 1.0;
        for (int j = 1; j < degree; ++j) {
            double guess = -std::cos(pi * j / degree);
            double x = newton_root(guess, [&](double t) {
                return legendre_deriv(degree, t);
            }, "lobatto");
            ns.nodes[j] = x;
        }
        for (int j = 0; j < n; ++j) {
            auto [p, dp] = legendre(degree, ns.nodes[j]);
            (void)dp;
            ns.weights[j] = 2.0 / (degree * (degree + 1.0) * p * p);
        }
    }

    // Symmetrize against rounding drift so xi_j = -xi_{N-j} holds exactly.
    for (int j = 0; j < n / 2; ++j) {
        double s = 0.5 * (ns.nodes[j] - ns.nodes[degree - j]);
        ns.nodes[j] = s;
        ns.nodes[degree - j] = -s;
        double w = 0.5 * (ns.weights[j] + ns.weights[degree - j]);
        ns.weights[j] = ns.weights[degree - j] = w;
    }
    if (n % 2 == 1) ns.nodes[degree / 2] = 0.0;

    ns.bary = barycentric_weights(ns.nodes);
    return ns;
}

DiffMatrix differentiation_matrix(const NodeSet& ns) {
    const int n = ns.size();
    DiffMatrix d;
    d.n = n;
    d.a.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double v = (ns.bary[j] / ns.bary[i]) / (ns.nodes[i] - ns.nodes[j]);
            d.a[static_cast<size_t>(i) * n + j] = v;
            diag -= v;
        }
        d.a[static_cast<size_t>(i) * n + i] = diag;  // rows sum to zero
    }
    return d;
}

std::vector<double> interpolation_matrix(const NodeSet& ns, std::span<const double> targets) {
    const int n = ns.size();
    std::vector<double> a(targets.size() * n, 0.0);
    for (size_t t = 0; t < targets.size(); ++t) {
        double x = targets[t];
        int hit = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(x - ns.nodes[j]) < 1e-14) {
                hit = j;
                break;
            }
        }
        double* row = a.data() + t * n;
        if (hit >= 0) {
            row[hit] = 1.0;
            continue;
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) {
            double c = ns.bary[j] / (x - ns.nodes[j]);
            row[j] = c;
            denom += c;
        }
        for (int j = 0; j < n; ++j) row[j] /= denom;
    }
    return a;
}

std::vector<double> interpolate(const NodeSet& ns, std::span<const double> nodal_values,
                                std::span<const double> targets) {
    if (nodal_values.size() != static_cast<size_t>(ns.size()))
        throw std::invalid_argument("interpolate: nodal value count != N+1");
    auto a = interpolation_matrix(ns, targets);
    std::vector<double> out(targets.size(), 0.0);
    const int n = ns.size();
    for (size_t t = 0; t < targets.size(); ++t)
        for (int j = 0; j < n; ++j) out[t] += a[t * n + j] * nodal_values[j];
    return out;
}

double interpolate_at(const NodeSet& ns, std::span<const double> nodal_values, double target) {
    return interpolate(ns, nodal_values, std::span<const double>(&target, 1))[0];
}

std::vector<double> boundary_interpolation_vector(const NodeSet& ns, int side) {
    double s = side > 0 ? 1.0 : -1.0;
    return interpolation_matrix(ns, std::span<const double>(&s, 1));
}

double discrete_inner_product(const Grid3& a, const Grid3& b, const NodeSet& ns1,
                              const NodeSet& ns2, const NodeSet& ns3) {
    if (a.n != b.n) throw std::invalid_argument("discrete_inner_product: shape mismatch");
    if (a.n[0] != ns1.size() || a.n[1] != ns2.size() || a.n[2] != ns3.size())
        throw std::invalid_argument("discrete_inner_product: grid/node set mismatch");
    double acc = 0.0;
    for (int j = 0; j < a.n[0]; ++j)
        for (int k = 0; k < a.n[1]; ++k) {
            double wjk = ns1.weights[j] * ns2.weights[k];
            for (int l = 0; l < a.n[2]; ++l)
                acc += a(j, k, l) * b(j, k, l) * wjk * ns3.weights[l];
        }
    return acc;
}

Grid3 apply_diff(const Grid3& f, const DiffMatrix& d, int axis) {
    return apply_matrix(f, d.a, d.n, axis);
}

Grid3 apply_matrix(const Grid3& f, std::span<const double> mat, int rows, int axis) {
    const int cols = f.n[axis];
    if (mat.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("apply_matrix: matrix shape mismatch");
    Grid3 g(axis == 0 ? rows : f.n[0], axis == 1 ? rows : f.n[1], axis == 2 ? rows : f.n[2]);
    for (int j = 0; j < g.n[0]; ++j)
        for (int k = 0; k < g.n[1]; ++k)
            for (int l = 0; l < g.n[2]; ++l) {
                int out_index[3] = {j, k, l};
                double acc = 0.0;
                for (int m = 0; m < cols; ++m) {
                    int in_index[3] = {j, k, l};
                    in_index[axis] = m;
                    acc += mat[static_cast<size_t>(out_index[axis]) * cols + m] *
                           f(in_index[0], in_index[1], in_index[2]);
                }
                g(j, k, l) = acc;
            }
    return g;
}

Grid2 apply_matrix2(const Grid2& f, std::span<const double> mat, int rows, int axis) {
    const int cols = f.n[axis];
    if (mat.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("apply_matrix2: matrix shape mismatch");
    Grid2 g(axis == 0 ? rows : f.n[0], axis == 1 ? rows : f.n[1]);
    for (int j = 0; j < g.n[0]; ++j)
        for (int k = 0; k < g.n[1]; ++k) {
            int out_index[2] = {j, k};
            double acc = 0.0;
            for (int m = 0; m < cols; ++m) {
                int in_index[2] = {j, k};
                in_index[axis] = m;
                acc += mat[static_cast<size_t>(out_index[axis]) * cols + m] *
                       f(in_index[0], in_index[1]);
            }
            g(j, k) = acc;
        }
    return g;
}

Grid2 face_trace(const Grid3& f, std::span<const double> bvec, int axis) {
    if (bvec.size() != static_cast<size_t>(f.n[axis]))
        throw std::invalid_argument("face_trace: boundary vector length mismatch");
    int na = axis == 0 ? f.n[1] : f.n[0];
    int nb = axis == 2 ? f.n[1] : f.n[2];
    Grid2 g(na, nb);
    for (int p = 0; p < na; ++p)
        for (int q = 0; q < nb; ++q) {
            double acc = 0.0;
            for (int m = 0; m < f.n[axis]; ++m) {
                int in_index[3];
                if (axis == 0) {
                    in_index[0] = m; in_index[1] = p; in_index[2] = q;
                } else if (axis == 1) {
                    in_index[0] = p; in_index[1] = m; in_index[2] = q;
                } else {
                    in_index[0] = p; in_index[1] = q; in_index[2] = m;
                }
                acc += bvec[m] * f(in_index[0], in_index[1], in_index[2]);
            }
            g(p, q) = acc;
        }
    return g;
}

ProductMismatch product_interpolation_mismatch(std::span<const double> u_vals,
                                               std::span<const double> v_vals,
                                               const NodeSet& ns) {
    const int n = ns.size();
    if (u_vals.size() != static_cast<size_t>(n) || v_vals.size() != static_cast<size_t>(n))
        throw std::invalid_argument("product_interpolation_mismatch: value count != N+1");

    // Parent-side product interpolant: nodal products on the parent grid.
    std::vector<double> w_parent(n);
    for (int j = 0; j < n; ++j) w_parent[j] = u_vals[j] * v_vals[j];

    // Child-side: sample U and V at the left-half images of the nodes, then
    // take the nodal product there.
    std::vector<double> mapped(n);
    for (int j = 0; j < n; ++j) mapped[j] = 0.5 * (ns.nodes[j] - 1.0);
    auto u_child = interpolate(ns, u_vals, mapped);
    auto v_child = interpolate(ns, v_vals, mapped);
    std::vector<double> w_child(n);
    for (int j = 0; j < n; ++j) w_child[j] = u_child[j] * v_child[j];

    // Dense comparison in child coordinates.
    const int samples = 1001;
    std::vector<double> xi(samples), parent_pts(samples);
    for (int i = 0; i < samples; ++i) {
        xi[i] = -1.0 + 2.0 * i / (samples - 1);
        parent_pts[i] = 0.5 * (xi[i] - 1.0);
    }
    auto parent_vals = interpolate(ns, w_parent, parent_pts);
    auto child_vals = interpolate(ns, w_child, xi);

    ProductMismatch out{0.0, -1.0};
    for (int i = 0; i < samples; ++i) {
        double diff = std::abs(parent_vals[i] - child_vals[i]);
        if (diff > out.max_mismatch) {
            out.max_mismatch = diff;
            out.witness_point = xi[i];
        }
    }
    return out;
}

}  // namespace fsp
