#include "blab/compcomp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace blab {

namespace {

double periodic_bump(double x, double c, double r, double L) {
    return bump(x - c - L * std::round((x - c) / L), 0.0, r);
}

}  // namespace

std::vector<Field> default_tests(const SpacetimeGrid& g) {
    std::vector<Field> out;
    const double T = g.T, L = g.L;
    for (int j = 0; j < 8; ++j) {
        const double ct = T * (0.35 + 0.3 * ((j * 3) % 8) / 7.0);
        const double rt = T * (0.2 + 0.1 * (j % 3) / 2.0);
        const double cx = L * (j + 0.5) / 8.0;
        const double rx = L * (0.15 + 0.15 * ((j * 5) % 8) / 7.0);
        const double cy = L * ((j * 3) % 8 + 0.5) / 8.0;
        out.push_back(sample(g, [&](const Point& p) {
            double v = bump(p[0], ct, rt) * periodic_bump(p[1], cx, rx, L);
            if (g.n == 2) v *= periodic_bump(p[2], cy, rx, L);
            return v;
        }));
    }
    return out;
}

namespace {

FieldLadder trig_ladder(const SpacetimeGrid& g, std::vector<double> eps, std::vector<std::array<double, 2>> waves) {
    // u = sum_w eps sin((k x - w t) / eps) with waves = {(k, w)}
    FieldLadder f;
    f.eps = eps;
    f.u = [g, eps, waves](std::size_t l) {
        const double e = eps.at(l);
        return sample(g, [&](const Point& p) {
            double s = 0.0;
            for (const auto& kw : waves) s += e * std::sin((kw[0] * p[1] - kw[1] * p[0]) / e);
            return s;
        });
    };
    f.du = [g, eps, waves](std::size_t l) {
        const double e = eps.at(l);
        std::vector<Field> d(g.dim(), Field(g.size(), 0.0));
        for (std::size_t q = 0; q < g.size(); ++q) {
            const Point p = g.point(q);
            for (const auto& kw : waves) {
                const double c = std::cos((kw[0] * p[1] - kw[1] * p[0]) / e);
                d[0][q] -= kw[1] * c;
                d[1][q] += kw[0] * c;
            }
        }
        return d;
    };
    return f;
}

}  // namespace

FieldLadder null_plane_ladder(const SpacetimeGrid& g, std::vector<double> eps) {
    return trig_ladder(g, std::move(eps), {{1.0, 1.0}});
}

FieldLadder crossing_null_ladder(const SpacetimeGrid& g, std::vector<double> eps) {
    return trig_ladder(g, std::move(eps), {{1.0, 1.0}, {1.0, -1.0}});
}

FieldLadder spatial_phase_ladder(const SpacetimeGrid& g, std::vector<double> eps) {
    return trig_ladder(g, std::move(eps), {{1.0, 0.0}});
}

FieldLadder zero_ladder(const SpacetimeGrid& g, std::vector<double> eps) { return trig_ladder(g, std::move(eps), {}); }

FieldLadder shifted(const SpacetimeGrid& g, FieldLadder base, std::vector<double> c) {
    c.resize(g.dim(), 0.0);
    FieldLadder f;
    f.eps = base.eps;
    if (base.u)
        f.u = [g, base, c](std::size_t l) {
            Field u = base.u(l);
            for (std::size_t q = 0; q < g.size(); ++q) {
                const Point p = g.point(q);
                for (int a = 0; a < g.dim(); ++a) u[q] += c[a] * p[a];
            }
            return u;
        };
    f.du = [g, base, c](std::size_t l) {
        std::vector<Field> d = base.du(l);
        for (int a = 0; a < g.dim(); ++a)
            for (double& v : d[a]) v += c[a];
        return d;
    };
    return f;
}

WeakLimitProbe weak_limit(const SpacetimeGrid& g, const std::vector<double>& eps,
                          const std::function<Field(std::size_t)>& v, const std::vector<Field>& tests) {
    if (eps.size() < 3) throw Error("weak_limit: ladder shorter than 3 levels");
    WeakLimitProbe p;
    p.eps = eps;
    const std::size_t J = tests.size();
    Field w(g.size());
    for (std::size_t l = 0; l < eps.size(); ++l) {
        const Field f = v(l);
        if (f.size() != g.size()) throw Error("weak_limit: field does not match the grid");
        std::vector<double> row(J);
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t q = 0; q < g.size(); ++q) w[q] = f[q] * tests[j][q];
            row[j] = integrate(g, w);
            if (l + 1 == eps.size()) {
                for (std::size_t q = 0; q < g.size(); ++q) w[q] = std::abs(w[q]);
                p.scale.push_back(integrate(g, w));
            }
        }
        p.pairings.push_back(std::move(row));
    }
    const std::size_t L = eps.size();
    for (std::size_t j = 0; j < J; ++j) {
        p.limit.push_back(p.pairings[L - 1][j]);
        const double a = p.pairings[L - 3][j], b = p.pairings[L - 2][j], c = p.pairings[L - 1][j];
        p.err.push_back(std::max({a, b, c}) - std::min({a, b, c}));
    }
    return p;
}

namespace {

double g_inv_pair(const MetricField& g, const std::vector<Field>& a, const std::vector<Field>& b, std::size_t q) {
    double s = 0.0;
    for (int al = 0; al < g.dim(); ++al)
        for (int be = 0; be < g.dim(); ++be) s += g.ginv(al, be)[q] * a[al][q] * b[be][q];
    return s;
}

void judge(LimitVerdict& v, const std::vector<Field>& tests, const SpacetimeGrid& g) {
    const WeakLimitProbe& p = v.probe;
    const std::size_t J = tests.size();
    if (v.target.empty()) v.target.assign(J, 0.0);
    if (v.target.size() != J) throw Error("limit target size does not match the test set");
    auto dev = [&](const std::vector<double>& row) {
        double m = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double num = std::abs(row[j] - v.target[j]);
            if (num == 0.0) continue;
            double s = p.scale[j];
            if (s == 0.0) {
                Field a = tests[j];
                for (double& x : a) x = std::abs(x);
                s = integrate(g, a);
            }
            m = std::max(m, num / s);
        }
        return m;
    };
    for (const auto& row : p.pairings) v.deviation.push_back(dev(row));
    v.max_deviation = dev(p.limit);
    v.pass = v.max_deviation < v.tol;
}

double box_l3(const MetricField& g, const Field& u) { return lp_norm(g.grid(), box_apply(g, u), 3.0); }

}  // namespace

LimitVerdict nullform_limit(const MetricField& g, const FieldLadder& u1, const FieldLadder& u2,
                            const std::vector<Field>& du1, const std::vector<Field>& du2, const std::vector<Field>& tests,
                            double tol) {
    const SpacetimeGrid& G = g.grid();
    if (u1.eps != u2.eps) throw Error("nullform_limit: ladders differ");
    LimitVerdict v;
    v.tol = tol;
    v.probe = weak_limit(G, u1.eps, [&](std::size_t l) {
        const std::vector<Field> a = u1.du(l), b = u2.du(l);
        Field f(G.size());
        for (std::size_t q = 0; q < G.size(); ++q) f[q] = g_inv_pair(g, a, b, q);
        return f;
    }, tests);
    if (!du1.empty() && !du2.empty()) {
        Field lim(G.size());
        for (std::size_t q = 0; q < G.size(); ++q) lim[q] = g_inv_pair(g, du1, du2, q);
        Field w(G.size());
        for (const Field& t : tests) {
            for (std::size_t q = 0; q < G.size(); ++q) w[q] = lim[q] * t[q];
            v.target.push_back(integrate(G, w));
        }
    }
    judge(v, tests, G);
    if (u1.u)
        for (std::size_t l = 0; l < u1.eps.size(); ++l) v.box_l3.push_back(box_l3(g, u1.u(l)));
    return v;
}

LimitVerdict trilinear_limit(const MetricField& g, const std::vector<Field>& X, const FieldLadder& u1,
                             const FieldLadder& u2, const FieldLadder& u3, const std::vector<Field>& tests,
                             const std::vector<double>& target, double tol) {
    const SpacetimeGrid& G = g.grid();
    if (u1.eps != u2.eps || u1.eps != u3.eps) throw Error("trilinear_limit: ladders differ");
    if (int(X.size()) != G.dim()) throw Error("trilinear_limit: X needs one component per coordinate");
    LimitVerdict v;
    v.tol = tol;
    v.target = target;
    v.probe = weak_limit(G, u1.eps, [&](std::size_t l) {
        const std::vector<Field> a = u1.du(l), b = u2.du(l), c = u3.du(l);
        Field f(G.size());
        for (std::size_t q = 0; q < G.size(); ++q) {
            double xu = 0.0;
            for (int al = 0; al < G.dim(); ++al) xu += X[al][q] * a[al][q];
            f[q] = xu == 0.0 ? 0.0 : xu * g_inv_pair(g, b, c, q);
        }
        return f;
    }, tests);
    judge(v, tests, G);
    for (const FieldLadder* u : {&u1, &u2, &u3})
        if (u->u) v.box_l3.push_back(box_l3(g, u->u(u->eps.size() - 1)));
    return v;
}

void write_probe_csv(const std::string& path, const LimitVerdict& v, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << header << std::setprecision(12);
    const WeakLimitProbe& p = v.probe;
    os << "level,eps";
    for (std::size_t j = 0; j < p.limit.size(); ++j) os << ",phi" << j;
    os << ",deviation\n";
    for (std::size_t l = 0; l < p.pairings.size(); ++l) {
        os << l << "," << p.eps[l];
        for (double x : p.pairings[l]) os << "," << x;
        os << "," << v.deviation[l] << "\n";
    }
    os << "limit,0";
    for (double x : p.limit) os << "," << x;
    os << "," << v.max_deviation << "\n";
    os << "error_bar,0";
    for (double x : p.err) os << "," << x;
    os << ",\ntarget,0";
    for (double x : v.target) os << "," << x;
    os << ",\n";
    if (!os) throw Error("write failed: " + path);
}

}  // namespace blab
