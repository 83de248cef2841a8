#include "blab/vlasov.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "blab/grid.hpp"

namespace blab {

double RayBundle::total_weight() const {
    double s = 0.0;
    for (const Particle& q : p) s += q.w;
    return s;
}

double RayBundle::max_shell(const MetricModel& g) const {
    const int d = n + 1;
    double m = 0.0;
    for (const Particle& q : p) {
        if (!q.active) continue;
        const Mat gi = g.inverse(q.x);
        double h = 0.0, e = 0.0;
        for (int a = 0; a < d; ++a) {
            e += q.xi[a] * q.xi[a];
            for (int b = 0; b < d; ++b) h += gi(a, b) * q.xi[a] * q.xi[b];
        }
        if (e > 0.0) m = std::max(m, std::abs(h) / e);
    }
    return m;
}

RayBundle make_bundle(const SpacetimeGrid& g) {
    RayBundle b;
    b.n = g.n;
    b.T = g.T;
    b.L = g.L;
    return b;
}

double TestSymbol::homogeneity_defect(int n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), c(0.1, 10.0);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        Point x{0.5 * (u(rng) + 1.0), kPi * (u(rng) + 1.0), kPi * (u(rng) + 1.0)};
        double xi[3] = {u(rng), u(rng), n == 2 ? u(rng) : 0.0}, cxi[3];
        const double s = c(rng);
        for (int a = 0; a < 3; ++a) cxi[a] = s * xi[a];
        const double v = value(x, xi);
        worst = std::max(worst, std::abs(value(x, cxi) - s * v) / std::max(1.0, std::abs(s * v)));
    }
    return worst;
}

TestSymbol odd_symbol(int n, std::function<double(const Point&)> b, std::function<void(const Point&, double*)> db,
                      std::array<double, 3> k, std::array<double, 3> kc, double c3) {
    const int d = n + 1;
    TestSymbol s;
    s.b = std::move(b);
    s.db = std::move(db);
    s.m = [d, k, kc, c3](const double* xi) {
        double lin = 0.0, q = 0.0, r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            lin += k[a] * xi[a];
            q += kc[a] * xi[a];
            r2 += xi[a] * xi[a];
        }
        return r2 > 0.0 ? lin + c3 * q * q * q / r2 : 0.0;
    };
    s.dm = [d, k, kc, c3](const double* xi, double* out) {
        double q = 0.0, r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            q += kc[a] * xi[a];
            r2 += xi[a] * xi[a];
        }
        for (int a = 0; a < d; ++a)
            out[a] = k[a] + (r2 > 0.0 ? c3 * (3.0 * q * q * kc[a] / r2 - 2.0 * q * q * q * xi[a] / (r2 * r2)) : 0.0);
    };
    return s;
}

namespace {

double periodic_offset(double x, double c, double L) { return x - c - L * std::round((x - c) / L); }

}  // namespace

std::function<double(const Point&)> bump_window(int n, Point c, double s, double L) {
    return [n, c, s, L](const Point& p) {
        double r2 = (p[0] - c[0]) * (p[0] - c[0]);
        for (int i = 1; i <= n; ++i) {
            const double d = periodic_offset(p[i], c[i], L);
            r2 += d * d;
        }
        return std::exp(-r2 / (2.0 * s * s));
    };
}

std::function<void(const Point&, double*)> bump_window_gradient(int n, Point c, double s, double L) {
    auto b = bump_window(n, c, s, L);
    return [n, c, s, L, b](const Point& p, double* out) {
        const double v = b(p);
        out[0] = -(p[0] - c[0]) / (s * s) * v;
        for (int i = 1; i <= n; ++i) out[i] = -periodic_offset(p[i], c[i], L) / (s * s) * v;
    };
}

namespace {

struct PhasePoint {
    double y[6];  // x (d), xi (d)
};

// Hamiltonian vector field of 1/2 g^{ab} xi_a xi_b.
void hamilton(const MetricModel& g, int d, const double* y, double* dy) {
    const Point x{y[0], y[1], d > 2 ? y[2] : 0.0};
    const double* xi = y + d;
    const Mat gi = g.inverse(x);
    for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int b = 0; b < d; ++b) s += gi(a, b) * xi[b];
        dy[a] = s;
    }
    for (int mu = 0; mu < d; ++mu) {
        const Mat dg = g.dinverse(x, mu);
        double s = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) s += dg(a, b) * xi[a] * xi[b];
        dy[d + mu] = -0.5 * s;
    }
}

// Flow parametrised by x^0: divide by x0-dot. Returns false where x0-dot = 0.
bool hamilton_t(const MetricModel& g, int d, const double* y, double* dy) {
    hamilton(g, d, y, dy);
    const double v = dy[0];
    if (v == 0.0 || !std::isfinite(v)) return false;
    for (int i = 0; i < 2 * d; ++i) dy[i] /= v;
    return true;
}

template <class F>
bool rk4(F&& f, int m, double* y, double h) {
    double k1[6], k2[6], k3[6], k4[6], t[6];
    if (!f(y, k1)) return false;
    for (int i = 0; i < m; ++i) t[i] = y[i] + 0.5 * h * k1[i];
    if (!f(t, k2)) return false;
    for (int i = 0; i < m; ++i) t[i] = y[i] + 0.5 * h * k2[i];
    if (!f(t, k3)) return false;
    for (int i = 0; i < m; ++i) t[i] = y[i] + h * k3[i];
    if (!f(t, k4)) return false;
    for (int i = 0; i < m; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return true;
}

void load(const Particle& q, int d, double* y) {
    for (int a = 0; a < d; ++a) {
        y[a] = q.x[a];
        y[d + a] = q.xi[a];
    }
}

void store(Particle& q, int d, const double* y, double L) {
    q.x[0] = y[0];
    for (int a = 1; a < d; ++a) q.x[a] = y[a] - L * std::floor(y[a] / L);
    for (int a = 0; a < d; ++a) q.xi[a] = y[d + a];
}

}  // namespace

void push(RayBundle& b, const MetricModel& g, double ds, int steps) {
    if (g.n != b.n) throw Error("push: metric and bundle dimensions differ");
    const int d = b.n + 1;
    auto f = [&](const double* y, double* dy) {
        hamilton(g, d, y, dy);
        return true;
    };
    for (Particle& q : b.p) {
        if (!q.active) continue;
        double y[6];
        load(q, d, y);
        for (int s = 0; s < steps; ++s) {
            rk4(f, 2 * d, y, ds);
            if (y[0] < 0.0 || y[0] > b.T || !std::isfinite(y[0])) {
                q.active = false;
                break;
            }
        }
        store(q, d, y, b.L);
    }
}

void push_to_time(RayBundle& b, const MetricModel& g, double t1, int steps) {
    if (g.n != b.n) throw Error("push: metric and bundle dimensions differ");
    if (steps < 1) throw Error("push_to_time: steps must be positive");
    const int d = b.n + 1;
    auto f = [&](const double* y, double* dy) { return hamilton_t(g, d, y, dy); };
    for (Particle& q : b.p) {
        if (!q.active) continue;
        double y[6];
        load(q, d, y);
        const double h = (t1 - y[0]) / steps;
        for (int s = 0; s < steps && q.active; ++s)
            if (!rk4(f, 2 * d, y, h)) q.active = false;
        y[0] = t1;
        if (t1 < 0.0 || t1 > b.T) q.active = false;
        store(q, d, y, b.L);
    }
}

namespace {

void deposit(DefectMeasureHistogram& h, const Particle& q, double w) {
    const int d = h.dim;
    double e2 = 0.0;
    for (int a = 0; a < d; ++a) e2 += q.xi[a] * q.xi[a];
    if (e2 == 0.0 || w == 0.0) return;
    std::array<std::pair<int, double>, 4> wt;
    const int k = h.bins.weights(q.xi.data(), wt);
    for (int c = 0; c < h.cells.count(); ++c) {
        const double bc = h.cells.window(c, q.x);
        if (bc == 0.0) continue;
        // w |xi|^2 xi^_a xi^_b = w xi_a xi_b
        const double base = w * bc * bc;
        for (int i = 0; i < k; ++i)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) h.t(c, wt[i].first, a, b) += base * wt[i].second * q.xi[a] * q.xi[b];
    }
}

}  // namespace

DefectMeasureHistogram radial_project(const RayBundle& b, const CellLattice& cells, const DirectionBins& bins) {
    DefectMeasureHistogram h(cells, bins, b.n + 1);
    for (const Particle& q : b.p)
        if (q.active) deposit(h, q, q.w);
    h.derive_scalars();
    return h;
}

namespace {

void add_pair(RayBundle& b, const WkbFamily& fam, std::size_t q, double w) {
    const SpacetimeGrid& G = fam.grid();
    Particle p;
    p.x = G.point(q);
    p.w = w;
    for (int a = 0; a < G.dim(); ++a) p.xi[a] = fam.phase->dphi[a][q];
    b.p.push_back(p);
    for (int a = 0; a < G.dim(); ++a) p.xi[a] = -p.xi[a];
    b.p.push_back(p);
}

}  // namespace

RayBundle bundle_from_family(const WkbFamily& fam) {
    const SpacetimeGrid& G = fam.grid();
    RayBundle b = make_bundle(G);
    const double vol = G.dt() * std::pow(G.dx(), G.n);
    for (std::size_t q = 0; q < G.size(); ++q) {
        const double a2 = fam.a[q] * fam.a[q];
        if (a2 == 0.0) continue;
        const int k = int(q / G.slice_size());
        const double wt = (k == 0 || k == G.Nt) ? 0.5 : 1.0;
        add_pair(b, fam, q, 0.25 * a2 * vol * wt);
    }
    return b;
}

RayBundle sample_bundle(const WkbFamily& fam, std::size_t n, std::uint64_t seed) {
    const SpacetimeGrid& G = fam.grid();
    RayBundle b = make_bundle(G);
    if (n == 0) return b;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, G.size() - 1);
    // uniform over grid points carrying the trapezoid weight: total volume / n each
    const double vol = G.dt() * std::pow(G.dx(), G.n);
    const double scale = double(G.size()) * vol / double(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t q = pick(rng);
        const int k = int(q / G.slice_size());
        const double wt = (k == 0 || k == G.Nt) ? 0.5 : 1.0;
        const double a2 = fam.a[q] * fam.a[q];
        if (a2 == 0.0) continue;
        add_pair(b, fam, q, 0.25 * a2 * scale * wt);
    }
    return b;
}

RayBundle slice_bundle(const WkbFamily& fam, const MetricModel& g, int k) {
    const SpacetimeGrid& G = fam.grid();
    if (k < 0 || k > G.Nt) throw Error("slice_bundle: time level out of range");
    RayBundle b = make_bundle(G);
    const double dx = std::pow(G.dx(), G.n);
    const int d = G.dim();
    for (std::size_t r = 0; r < G.slice_size(); ++r) {
        const std::size_t q = std::size_t(k) * G.slice_size() + r;
        const double a2 = fam.a[q] * fam.a[q];
        if (a2 == 0.0) continue;
        const Mat gi = g.inverse(G.point(q));
        double v = 0.0;
        for (int be = 0; be < d; ++be) v += gi(0, be) * fam.phase->dphi[be][q];
        add_pair(b, fam, q, 0.25 * a2 * std::abs(v) * dx);
    }
    return b;
}

DefectMeasureHistogram sweep_project(RayBundle b, const MetricModel& g, const SpacetimeGrid& grid, int k0, int k1,
                                     const CellLattice& cells, const DirectionBins& bins, int substeps) {
    if (k0 < 0 || k1 > grid.Nt || k0 > k1) throw Error("sweep_project: bad level range");
    DefectMeasureHistogram h(cells, bins, grid.dim());
    const int d = grid.dim();
    for (int k = k0; k <= k1; ++k) {
        if (k > k0) push_to_time(b, g, k * grid.dt(), substeps);
        const double wt = ((k == 0 || k == grid.Nt) ? 0.5 : 1.0) * grid.dt();
        for (const Particle& q : b.p) {
            if (!q.active) continue;
            const Mat gi = g.inverse(q.x);
            double v = 0.0;
            for (int be = 0; be < d; ++be) v += gi(0, be) * q.xi[be];
            if (v == 0.0) continue;
            deposit(h, q, q.w * wt / std::abs(v));
        }
    }
    h.derive_scalars();
    return h;
}

double vlasov_residual(const DefectMeasureHistogram& nu, const MetricModel& g, const TestSymbol& a,
                       const DefectMeasureHistogram* lambda) {
    const int d = nu.dim;
    double sum = 0.0;
    for (int c = 0; c < nu.cells.count(); ++c) {
        const Point x = nu.cells.center(c);
        const Mat gi = g.inverse(x);
        std::vector<Mat> dg;
        for (int mu = 0; mu < d; ++mu) dg.push_back(g.dinverse(x, mu));
        double db[3], dm[3];
        a.db(x, db);
        const double bx = a.b(x);
        for (int bin = 0; bin < nu.nbins(); ++bin) {
            const std::size_t e = nu.at(c, bin);
            const double w = nu.nu[e];
            const double lw = lambda ? lambda->lambda[lambda->at(c, bin)] : 0.0;
            if (w == 0.0 && lw == 0.0) continue;
            const Vec xv = nu.bins.center(bin);
            double xi[3] = {0.0, 0.0, 0.0};
            for (int al = 0; al < d; ++al) xi[al] = xv[al];
            const double m = a.m(xi);
            a.dm(xi, dm);
            double t = 0.0;
            for (int al = 0; al < d; ++al)
                for (int be = 0; be < d; ++be) t += gi(al, be) * xi[al] * db[be] * m;
            for (int mu = 0; mu < d; ++mu) {
                double s = 0.0;
                for (int al = 0; al < d; ++al)
                    for (int be = 0; be < d; ++be) s += dg[mu](al, be) * xi[al] * xi[be];
                t -= 0.5 * s * bx * dm[mu];
            }
            sum += t * w + bx * m * lw;
        }
    }
    return sum;
}

MetricSamples sample_metric(const SpacetimeGrid& grid, const MetricModel& g) {
    const int d = grid.dim();
    const int ns = sym_count(d);
    MetricSamples ms;
    ms.grid = grid;
    ms.ginv.assign(ns, Field(grid.size()));
    ms.dginv.assign(d, std::vector<Field>(ns, Field(grid.size())));
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const Point p = grid.point(q);
        const Mat gi = g.inverse(p);
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) ms.ginv[sym_index(d, a, b)][q] = gi(a, b);
        for (int mu = 0; mu < d; ++mu) {
            const Mat dg = g.dinverse(p, mu);
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) ms.dginv[mu][sym_index(d, a, b)][q] = dg(a, b);
        }
    }
    return ms;
}

SymbolResidual symbol_residual(const PairingEngine& eng, const MetricSamples& ms, const std::vector<Field>& v,
                               const Field& f, const TestSymbol& a) {
    const SpacetimeGrid& G = eng.grid();
    require_same(G, ms.grid, "symbol_residual");
    const int d = G.dim();
    if (int(v.size()) != d) throw Error("symbol_residual: need one field per space-time component");
    const std::size_t N = G.size();
    Field b(N);
    std::vector<Field> db(d, Field(N));
    for (std::size_t q = 0; q < N; ++q) {
        const Point p = G.point(q);
        b[q] = a.b(p);
        double g3[3];
        a.db(p, g3);
        for (int al = 0; al < d; ++al) db[al][q] = g3[al];
    }
    SymbolResidual r;
    Field wv(N);
    // g^{ab} xi_a d_b b m: window W_a = g^{ab} d_b b, symbol xi^_a m, against nu = sum_g nu_gg
    for (int al = 0; al < d; ++al) {
        const SymbolFn s = [&a, al](const double* xi) { return xi[al] * a.m(xi); };
        double part = 0.0;
        for (int ga = 0; ga < d; ++ga) {
            for (std::size_t q = 0; q < N; ++q) {
                double W = 0.0;
                for (int be = 0; be < d; ++be) W += ms.ginv[sym_index(d, al, be)][q] * db[be][q];
                wv[q] = W * v[ga][q];
            }
            part += eng.pair(wv, s, ga).real();
        }
        r.residual += part;
        r.transport += std::abs(part);
    }
    // -1/2 d_mu g^{ab} b d_{xi_mu} m against nu_ab
    for (int mu = 0; mu < d; ++mu) {
        const SymbolFn s = [&a, mu](const double* xi) {
            double g3[3];
            a.dm(xi, g3);
            return g3[mu];
        };
        for (int be = 0; be < d; ++be) {
            for (std::size_t q = 0; q < N; ++q) {
                double acc = 0.0;
                for (int al = 0; al < d; ++al) acc += ms.dginv[mu][sym_index(d, al, be)][q] * v[al][q];
                wv[q] = -0.5 * b[q] * acc;
            }
            const double part = eng.pair(wv, s, be).real();
            r.residual += part;
            r.transport += std::abs(part);
        }
    }
    if (!f.empty()) {
        // int a d Re lambda, lambda = xi^_a lambda_a, lambda_a the (v_a, f) block
        for (int al = 0; al < d; ++al) {
            const SymbolFn s = [&a, al](const double* xi) { return xi[al] * a.m(xi); };
            for (std::size_t q = 0; q < N; ++q) wv[q] = b[q] * v[al][q];
            r.source += eng.pair(wv, s, d).real();
        }
        r.residual += r.source;
    }
    return r;
}

void write_bundle_csv(const std::string& path, const RayBundle& b, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    const int d = b.n + 1;
    os << header << std::setprecision(17);
    for (int a = 0; a < d; ++a) os << "x" << a << ",";
    for (int a = 0; a < d; ++a) os << "xi" << a << ",";
    os << "w,active\n";
    for (const Particle& q : b.p) {
        for (int a = 0; a < d; ++a) os << q.x[a] << ",";
        for (int a = 0; a < d; ++a) os << q.xi[a] << ",";
        os << q.w << "," << (q.active ? 1 : 0) << "\n";
    }
    if (!os) throw Error("write failed: " + path);
}

}  // namespace blab
