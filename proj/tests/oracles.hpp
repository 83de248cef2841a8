#pragma once
// Independent reference computations for the test suite. Derivatives here come
// from exact forward-mode second-order jets, never from the library's stencils.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Value, gradient and Hessian with respect to (t, x1, x2).
struct Jet {
    double v = 0.0;
    std::array<double, 3> g{};
    std::array<std::array<double, 3>, 3> h{};

    Jet() = default;
    Jet(double c) : v(c) {}
    static Jet var(double value, int i) {
        Jet j(value);
        j.g[i] = 1.0;
        return j;
    }
};

inline Jet chain(const Jet& a, double f, double f1, double f2) {
    Jet r(f);
    for (int i = 0; i < 3; ++i) r.g[i] = f1 * a.g[i];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.h[i][j] = f1 * a.h[i][j] + f2 * a.g[i] * a.g[j];
    return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r(a.v + b.v);
    for (int i = 0; i < 3; ++i) {
        r.g[i] = a.g[i] + b.g[i];
        for (int j = 0; j < 3; ++j) r.h[i][j] = a.h[i][j] + b.h[i][j];
    }
    return r;
}
inline Jet operator-(const Jet& a) { return chain(a, -a.v, -1.0, 0.0); }
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int i = 0; i < 3; ++i) {
        r.g[i] = a.g[i] * b.v + a.v * b.g[i];
        for (int j = 0; j < 3; ++j)
            r.h[i][j] = a.h[i][j] * b.v + a.v * b.h[i][j] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    }
    return r;
}
inline Jet inv(const Jet& a) { return chain(a, 1.0 / a.v, -1.0 / (a.v * a.v), 2.0 / (a.v * a.v * a.v)); }
inline Jet operator/(const Jet& a, const Jet& b) { return a * inv(b); }
inline Jet sin(const Jet& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}
inline Jet log(const Jet& a) { return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sqrt(const Jet& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet abs(const Jet& a) { return a.v < 0 ? -a : a; }

using JetMat = std::vector<std::vector<Jet>>;
using MetricFn = std::function<JetMat(const Jet&, const Jet&, const Jet&)>;
using ScalarFn = std::function<Jet(const Jet&, const Jet&, const Jet&)>;

inline JetMat invert(const JetMat& a) {
    const int n = int(a.size());
    JetMat m = a, r(n, std::vector<Jet>(n, Jet(0.0)));
    for (int i = 0; i < n; ++i) r[i][i] = Jet(1.0);
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int i = c + 1; i < n; ++i)
            if (std::abs(m[i][c].v) > std::abs(m[p][c].v)) p = i;
        std::swap(m[c], m[p]);
        std::swap(r[c], r[p]);
        const Jet ip = inv(m[c][c]);
        for (int j = 0; j < n; ++j) {
            m[c][j] = m[c][j] * ip;
            r[c][j] = r[c][j] * ip;
        }
        for (int i = 0; i < n; ++i) {
            if (i == c) continue;
            const Jet f = m[i][c];
            for (int j = 0; j < n; ++j) {
                m[i][j] = m[i][j] - f * m[c][j];
                r[i][j] = r[i][j] - f * r[c][j];
            }
        }
    }
    return r;
}

inline Jet det(const JetMat& a) {
    const int n = int(a.size());
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    Jet d(0.0);
    for (int c = 0; c < n; ++c) {
        JetMat minor;
        for (int i = 1; i < n; ++i) {
            std::vector<Jet> row;
            for (int j = 0; j < n; ++j)
                if (j != c) row.push_back(a[i][j]);
            minor.push_back(row);
        }
        const Jet term = a[0][c] * det(minor);
        d = (c % 2 == 0) ? d + term : d - term;
    }
    return d;
}

struct Eval {
    JetMat ginv;
    Jet lnsqrtg;
    Jet u;
};

inline Eval evaluate(const MetricFn& g, const ScalarFn& u, double t, double x, double y) {
    const Jet T = Jet::var(t, 0), X = Jet::var(x, 1), Y = Jet::var(y, 2);
    const JetMat G = g(T, X, Y);
    Eval e;
    e.ginv = invert(G);
    e.lnsqrtg = 0.5 * log(abs(det(G)));
    e.u = u(T, X, Y);
    return e;
}

// Exact covariant wave operator at one point: dim = 1 + n.
inline double box(const MetricFn& g, const ScalarFn& u, double t, double x, double y = 0.0) {
    const Eval e = evaluate(g, u, t, x, y);
    const int d = int(e.ginv.size());
    double r = 0.0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            r += e.ginv[a][b].v * e.u.h[a][b] + (e.ginv[a][b].g[a] + e.ginv[a][b].v * e.lnsqrtg.g[a]) * e.u.g[b];
    return r;
}

// Exact Ricci tensor R_ab (coordinate components, dim = 1 + n <= 3) at one point.
inline std::vector<std::vector<double>> ricci(const MetricFn& g, double t, double x, double y = 0.0) {
    const Jet T = Jet::var(t, 0), X = Jet::var(x, 1), Y = Jet::var(y, 2);
    const JetMat G = g(T, X, Y);
    const JetMat Gi = invert(G);
    const int d = int(G.size());
    // Gamma^c_ab and its derivative dG[e][c][a][b]
    double Ga[3][3][3] = {}, dGa[3][3][3][3] = {};
    for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int e = 0; e < d; ++e) {
                    const double low = G[e][b].g[a] + G[e][a].g[b] - G[a][b].g[e];
                    Ga[c][a][b] += 0.5 * Gi[c][e].v * low;
                    for (int f = 0; f < d; ++f) {
                        const double dlow = G[e][b].h[a][f] + G[e][a].h[b][f] - G[a][b].h[e][f];
                        dGa[f][c][a][b] += 0.5 * (Gi[c][e].g[f] * low + Gi[c][e].v * dlow);
                    }
                }
    std::vector<std::vector<double>> R(d, std::vector<double>(d, 0.0));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double r = 0.0;
            for (int c = 0; c < d; ++c) {
                r += dGa[c][c][a][b] - dGa[b][c][a][c];
                for (int e = 0; e < d; ++e) r += Ga[c][c][e] * Ga[e][a][b] - Ga[c][b][e] * Ga[e][a][c];
            }
            R[a][b] = r;
        }
    return R;
}

}  // namespace oracle
