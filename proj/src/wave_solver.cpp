#include "blab/wave_solver.hpp"

#include <algorithm>
#include <cmath>

namespace blab {

double cfl_dt(const MetricField& g, double dx, double C) {
    if (!(dx > 0.0)) throw Error("cfl_dt: dx must be positive");
    double cmax = 0.0;
    for (int k = 0; k <= g.grid().Nt; ++k) cmax = std::max(cmax, max_light_speed(slice_coefficients(g, k)));
    return C * dx / cmax;
}

double cfl_dt(const MetricModel& m, const SpacetimeGrid& grid, double C) {
    if (!(grid.dx() > 0.0)) throw Error("cfl_dt: dx must be positive");
    double cmax = 0.0;
    for (int k = 0; k <= grid.Nt; ++k)
        cmax = std::max(cmax, max_light_speed(slice_coefficients(grid.spatial(), m, k * grid.dt())));
    return C * grid.dx() / cmax;
}

WaveContext::WaveContext(MetricModel m, SpatialGrid s) : model_(std::move(m)), grid_(s) {
    grid_.validate();
    if (model_.n != grid_.n) throw Error("WaveContext: metric and grid dimensions differ");
}

const SliceCoefficients& WaveContext::at(double t) const {
    for (int i = 0; i < 4; ++i)
        if (used_[i] && cache_[i].t == t) return cache_[i];
    const int i = next_;
    next_ = (next_ + 1) % 4;
    cache_[i] = slice_coefficients(grid_, model_, t);
    used_[i] = true;
    return cache_[i];
}

WaveState make_state(const WaveContext& ctx, double t, Field u, Field v) {
    const SliceCoefficients& c = ctx.at(t);
    if (u.size() != c.s.size() || v.size() != c.s.size()) throw Error("make_state: data size does not match grid");
    WaveState s;
    s.t = t;
    s.u = std::move(u);
    s.v = std::move(v);
    s.p.resize(s.u.size());
    for (std::size_t r = 0; r < s.p.size(); ++r) s.p[r] = c.sqrtg[r] * c.ginv00[r] * s.v[r];
    return s;
}

namespace {

void linear_rhs(const SliceCoefficients& c, const Field& u, const Field& p, const Field* src, Field& du, Field& dp) {
    const SpatialGrid& s = c.s;
    const int n = s.n;
    const std::size_t m = s.size();
    std::vector<Field> Du(n);
    for (int i = 0; i < n; ++i) Du[i] = d_slice(s, u, i + 1);
    du.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        double a = p[r] / (c.sqrtg[r] * c.ginv00[r]);
        for (int i = 0; i < n; ++i) a += c.beta[i][r] * Du[i][r];
        du[r] = a;
    }
    dp.assign(m, 0.0);
    for (int i = 0; i < n; ++i) {
        Field flux(m);
        for (std::size_t r = 0; r < m; ++r) {
            double f = c.beta[i][r] * p[r];
            for (int j = 0; j < n; ++j) f -= c.sqrtg[r] * c.gt[sym_index(n, i, j)][r] * Du[j][r];
            flux[r] = f;
        }
        const Field df = d_slice(s, flux, i + 1);
        for (std::size_t r = 0; r < m; ++r) dp[r] += df[r];
    }
    if (src)
        for (std::size_t r = 0; r < m; ++r) dp[r] += c.sqrtg[r] * (*src)[r];
}

void check_finite(const Field& f, long step, const char* who) {
    for (double v : f)
        if (!std::isfinite(v)) throw Error(std::string(who) + ": non-finite value at step " + std::to_string(step));
}

void finish(const SliceCoefficients& c, WaveState& st) {
    st.v.resize(st.p.size());
    for (std::size_t r = 0; r < st.p.size(); ++r) st.v[r] = st.p[r] / (c.sqrtg[r] * c.ginv00[r]);
}

// Generic two-scheme stepper over a set of components sharing one right-hand side.
template <class Rhs>
void advance(std::vector<WaveState*>& comps, const WaveContext& ctx, double dt, Rhs&& rhs, const char* who) {
    const std::size_t nc = comps.size();
    const double t = comps[0]->t;
    std::vector<Field> du(nc), dp(nc);
    std::vector<const Field*> us(nc), ps(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        us[i] = &comps[i]->u;
        ps[i] = &comps[i]->p;
    }
    const bool leap = !comps[0]->u_prev.empty() && comps[0]->dt_prev == dt;
    rhs(t, us, ps, du, dp);
    if (leap) {
        for (std::size_t i = 0; i < nc; ++i) {
            WaveState& s = *comps[i];
            Field un(s.u.size()), pn(s.p.size());
            for (std::size_t r = 0; r < un.size(); ++r) {
                un[r] = s.u_prev[r] + 2.0 * dt * du[i][r];
                pn[r] = s.p_prev[r] + 2.0 * dt * dp[i][r];
            }
            s.u_prev = std::move(s.u);
            s.p_prev = std::move(s.p);
            s.u = std::move(un);
            s.p = std::move(pn);
        }
    } else {
        std::vector<Field> ustar(nc), pstar(nc), du2(nc), dp2(nc);
        for (std::size_t i = 0; i < nc; ++i) {
            const WaveState& s = *comps[i];
            ustar[i].resize(s.u.size());
            pstar[i].resize(s.p.size());
            for (std::size_t r = 0; r < s.u.size(); ++r) {
                ustar[i][r] = s.u[r] + dt * du[i][r];
                pstar[i][r] = s.p[r] + dt * dp[i][r];
            }
            us[i] = &ustar[i];
            ps[i] = &pstar[i];
        }
        rhs(t + dt, us, ps, du2, dp2);
        for (std::size_t i = 0; i < nc; ++i) {
            WaveState& s = *comps[i];
            s.u_prev = s.u;
            s.p_prev = s.p;
            for (std::size_t r = 0; r < s.u.size(); ++r) {
                s.u[r] += 0.5 * dt * (du[i][r] + du2[i][r]);
                s.p[r] += 0.5 * dt * (dp[i][r] + dp2[i][r]);
            }
        }
    }
    const SliceCoefficients& cn = ctx.at(t + dt);
    for (std::size_t i = 0; i < nc; ++i) {
        WaveState& s = *comps[i];
        s.t = t + dt;
        s.dt_prev = dt;
        ++s.steps;
        check_finite(s.u, s.steps, who);
        check_finite(s.p, s.steps, who);
        finish(cn, s);
    }
}

}  // namespace

void step_linear(const WaveContext& ctx, WaveState& st, const SourceFn& f, double dt) {
    if (!(dt > 0.0)) throw Error("step_linear: dt must be positive");
    std::vector<WaveState*> comps{&st};
    advance(
        comps, ctx, dt,
        [&](double t, const std::vector<const Field*>& us, const std::vector<const Field*>& ps, std::vector<Field>& du,
            std::vector<Field>& dp) {
            const SliceCoefficients& c = ctx.at(t);
            if (f) {
                const Field src = f(t);
                linear_rhs(c, *us[0], *ps[0], &src, du[0], dp[0]);
            } else {
                linear_rhs(c, *us[0], *ps[0], nullptr, du[0], dp[0]);
            }
        },
        "step_linear");
}

Target flat_target(int N) {
    Target t;
    t.N = N;
    t.name = "flat";
    t.metric = [N](const double*, double* g) {
        for (int i = 0; i < N * N; ++i) g[i] = (i % (N + 1) == 0) ? 1.0 : 0.0;
    };
    t.christoffel = [N](const double*, double* G) { std::fill(G, G + N * N * N, 0.0); };
    t.lo.assign(N, -1e300);
    t.hi.assign(N, 1e300);
    return t;
}

Target poincare_target(double psi_bound) {
    Target t;
    t.N = 2;
    t.name = "poincare";
    t.metric = [](const double* y, double* g) {
        g[0] = 2.0;
        g[1] = g[2] = 0.0;
        g[3] = 0.5 * std::exp(-4.0 * y[0]);
    };
    // Gamma^psi_{omega omega} = e^{-4 psi}/2, Gamma^omega_{psi omega} = Gamma^omega_{omega psi} = -2
    t.christoffel = [](const double* y, double* G) {
        std::fill(G, G + 8, 0.0);
        G[(0 * 2 + 1) * 2 + 1] = 0.5 * std::exp(-4.0 * y[0]);
        G[(1 * 2 + 0) * 2 + 1] = -2.0;
        G[(1 * 2 + 1) * 2 + 0] = -2.0;
    };
    t.lo = {-psi_bound, -1e300};
    t.hi = {psi_bound, 1e300};
    return t;
}

void step_wavemap(const WaveContext& ctx, const Target& target, WaveMapState& st, const MultiSourceFn& f,
                  double dt) {
    if (!(dt > 0.0)) throw Error("step_wavemap: dt must be positive");
    const int N = target.N;
    if (int(st.comp.size()) != N) throw Error("step_wavemap: component count differs from the target dimension");
    std::vector<WaveState*> comps;
    for (auto& c : st.comp) comps.push_back(&c);
    const long step = st.comp[0].steps;
    advance(
        comps, ctx, dt,
        [&](double t, const std::vector<const Field*>& us, const std::vector<const Field*>& ps, std::vector<Field>& du,
            std::vector<Field>& dp) {
            const SliceCoefficients& c = ctx.at(t);
            const SpatialGrid& s = c.s;
            const int n = s.n;
            const std::size_t m = s.size();
            std::vector<Field> src = f ? f(t) : std::vector<Field>(N, Field(m, 0.0));
            std::vector<std::vector<Field>> Du(N, std::vector<Field>(n));
            for (int I = 0; I < N; ++I)
                for (int i = 0; i < n; ++i) Du[I][i] = d_slice(s, *us[I], i + 1);
            std::vector<double> y(N), G(N * N * N), e0(N), Q(N * N);
            for (std::size_t r = 0; r < m; ++r) {
                for (int I = 0; I < N; ++I) {
                    y[I] = (*us[I])[r];
                    if (!(y[I] >= target.lo[I] && y[I] <= target.hi[I]))
                        throw Error("step_wavemap: target chart bound exceeded at step " + std::to_string(step + 1));
                    e0[I] = (*ps[I])[r] / (c.sqrtg[r] * c.ginv00[r]);
                }
                target.christoffel(y.data(), G.data());
                // g^{-1}(du^J, du^K) in the frame: g^{00} e0u^J e0u^K + gtilde^{ij} d_i u^J d_j u^K
                for (int J = 0; J < N; ++J)
                    for (int K = 0; K < N; ++K) {
                        double q = c.ginv00[r] * e0[J] * e0[K];
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) q += c.gt[sym_index(n, i, j)][r] * Du[J][i][r] * Du[K][j][r];
                        Q[J * N + K] = q;
                    }
                for (int I = 0; I < N; ++I) {
                    double nl = 0.0;
                    for (int J = 0; J < N; ++J)
                        for (int K = 0; K < N; ++K) nl += G[(I * N + J) * N + K] * Q[J * N + K];
                    src[I][r] -= nl;
                }
            }
            for (int I = 0; I < N; ++I) linear_rhs(c, *us[I], *ps[I], &src[I], du[I], dp[I]);
        },
        "step_wavemap");
}

namespace {

int substeps_for(const MetricModel& m, const SpacetimeGrid& out, double C) {
    const double dt = cfl_dt(m, out, C);
    return std::max(1, int(std::ceil(out.dt() / dt - 1e-9)));
}

void store(Evolution& ev, int k, std::size_t comp, const WaveState& s) {
    const std::size_t ss = ev.grid.slice_size();
    std::copy(s.u.begin(), s.u.end(), ev.u[comp].begin() + std::ptrdiff_t(k * ss));
    std::copy(s.v.begin(), s.v.end(), ev.v[comp].begin() + std::ptrdiff_t(k * ss));
}

}  // namespace

Evolution evolve_linear(const MetricModel& m, const SpacetimeGrid& out, const Field& u0, const Field& v0,
                        const SourceFn& f, double C) {
    out.validate();
    const WaveContext ctx(m, out.spatial());
    Evolution ev;
    ev.grid = out;
    ev.substeps = substeps_for(m, out, C);
    ev.u.assign(1, Field(out.size()));
    ev.v.assign(1, Field(out.size()));
    WaveState s = make_state(ctx, 0.0, u0, v0);
    store(ev, 0, 0, s);
    const double dt = out.dt() / ev.substeps;
    for (int k = 1; k <= out.Nt; ++k) {
        for (int j = 0; j < ev.substeps; ++j) step_linear(ctx, s, f, dt);
        store(ev, k, 0, s);
    }
    return ev;
}

Evolution evolve_wavemap(const MetricModel& m, const Target& target, const SpacetimeGrid& out,
                         const std::vector<Field>& u0, const std::vector<Field>& v0, const MultiSourceFn& f, double C) {
    out.validate();
    if (int(u0.size()) != target.N || int(v0.size()) != target.N)
        throw Error("evolve_wavemap: initial data must have one field per target component");
    const WaveContext ctx(m, out.spatial());
    Evolution ev;
    ev.grid = out;
    ev.substeps = substeps_for(m, out, C);
    ev.u.assign(target.N, Field(out.size()));
    ev.v.assign(target.N, Field(out.size()));
    WaveMapState s;
    for (int I = 0; I < target.N; ++I) s.comp.push_back(make_state(ctx, 0.0, u0[I], v0[I]));
    for (int I = 0; I < target.N; ++I) store(ev, 0, I, s.comp[I]);
    const double dt = out.dt() / ev.substeps;
    for (int k = 1; k <= out.Nt; ++k) {
        for (int j = 0; j < ev.substeps; ++j) step_wavemap(ctx, target, s, f, dt);
        for (int I = 0; I < target.N; ++I) store(ev, k, I, s.comp[I]);
    }
    return ev;
}

std::vector<Field> slab_gradient(const MetricField& g, const Field& u, const Field& v) {
    const SpacetimeGrid& G = g.grid();
    const int n = G.n;
    std::vector<Field> d(n + 1);
    for (int i = 1; i <= n; ++i) d[i] = d_space(G, u, i);
    d[0] = v;
    for (int i = 1; i <= n; ++i)
        for (std::size_t q = 0; q < G.size(); ++q) d[0][q] += g.shift(i)[q] * d[i][q];
    return d;
}

double slice_energy(const WaveContext& ctx, const WaveState& st) {
    const SliceCoefficients& c = ctx.at(st.t);
    const SpatialGrid& s = c.s;
    const int n = s.n;
    std::vector<Field> Du(n);
    for (int i = 0; i < n; ++i) Du[i] = d_slice(s, st.u, i + 1);
    Field e(s.size());
    for (std::size_t r = 0; r < e.size(); ++r) {
        double q = -c.ginv00[r] * st.v[r] * st.v[r];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) q += c.gt[sym_index(n, i, j)][r] * Du[i][r] * Du[j][r];
        e[r] = 0.5 * c.sqrtg[r] * q;
    }
    return integrate(s, e);
}

EnergyDensity stress_current(const MetricField& g, const Field& u1, const Field& u2, const std::vector<Field>& X) {
    const SpacetimeGrid& G = g.grid();
    const int d = G.dim();
    if (u1.size() != G.size() || u2.size() != G.size() || int(X.size()) != d)
        throw Error("stress_current: inputs do not match the metric grid");
    std::vector<Field> a(d), b(d);
    for (int al = 0; al < d; ++al) {
        a[al] = d_coord(G, u1, al);
        b[al] = d_coord(G, u2, al);
    }
    Field Q(G.size(), 0.0);
    for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be)
            for (std::size_t q = 0; q < G.size(); ++q) Q[q] += g.ginv(al, be)[q] * a[al][q] * b[be][q];
    EnergyDensity E;
    E.T.assign(sym_count(d), Field(G.size()));
    for (int al = 0; al < d; ++al)
        for (int be = al; be < d; ++be) {
            Field& T = E.T[sym_index(d, al, be)];
            for (std::size_t q = 0; q < G.size(); ++q)
                T[q] = 0.5 * (a[al][q] * b[be][q] + a[be][q] * b[al][q]) - 0.5 * g.g(al, be)[q] * Q[q];
        }
    E.J.assign(d, Field(G.size(), 0.0));
    for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) {
            const Field& T = E.T[sym_index(d, al, be)];
            for (std::size_t q = 0; q < G.size(); ++q) E.J[al][q] += T[q] * X[be][q];
        }
    return E;
}

double energy_residual(const MetricField& g, const Field& u1, const Field& u2, const std::vector<Field>& X,
                       const Field& phi) {
    const SpacetimeGrid& G = g.grid();
    const int d = G.dim();
    const std::size_t sz = G.size();
    if (phi.size() != sz) throw Error("energy_residual: test function does not match the grid");
    const EnergyDensity E = stress_current(g, u1, u2, X);
    const Field& sg = g.sqrtdet();
    // div J = (1/sqrt|g|) d_a(sqrt|g| g^{ab} J_b)
    Field integrand(sz, 0.0);
    for (int al = 0; al < d; ++al) {
        Field flux(sz, 0.0);
        for (int be = 0; be < d; ++be)
            for (std::size_t q = 0; q < sz; ++q) flux[q] += sg[q] * g.ginv(al, be)[q] * E.J[be][q];
        const Field df = d_coord(G, flux, al);
        for (std::size_t q = 0; q < sz; ++q) integrand[q] += df[q] / sg[q];
    }
    const Field b1 = box_apply(g, u1), b2 = box_apply(g, u2);
    Field X1(sz, 0.0), X2(sz, 0.0);
    std::vector<Field> dX(d * d);
    for (int al = 0; al < d; ++al) {
        const Field d1 = d_coord(G, u1, al), d2 = d_coord(G, u2, al);
        for (std::size_t q = 0; q < sz; ++q) {
            X1[q] += X[al][q] * d1[q];
            X2[q] += X[al][q] * d2[q];
        }
        for (int m = 0; m < d; ++m) dX[m * d + al] = d_coord(G, X[m], al);  // d_al X^m
    }
    std::vector<Field> dg(sym_count(d) * d);
    for (int al = 0; al < d; ++al)
        for (int be = al; be < d; ++be)
            for (int m = 0; m < d; ++m) dg[sym_index(d, al, be) * d + m] = d_coord(G, g.g(al, be), m);
    for (std::size_t q = 0; q < sz; ++q) {
        const Mat gi = g.inverse_at(q), gl = g.lower_at(q);
        Mat T(d, d), LX(d, d);
        for (int al = 0; al < d; ++al)
            for (int be = 0; be < d; ++be) {
                T(al, be) = E.T[sym_index(d, al, be)][q];
                double l = 0.0;
                for (int m = 0; m < d; ++m)
                    l += X[m][q] * dg[sym_index(d, al, be) * d + m][q] + gl(m, be) * dX[m * d + al][q] +
                         gl(al, m) * dX[m * d + be][q];
                LX(al, be) = l;
            }
        const Mat Tup = gi * T * gi;
        const double tdx = 0.5 * (Tup.cwiseProduct(LX)).sum();
        integrand[q] = (integrand[q] - 0.5 * (X1[q] * b2[q] + X2[q] * b1[q]) - tdx) * phi[q] * sg[q];
    }
    return std::abs(integrate(G, integrand));
}

Field lagrangian_density(const Target& target, const std::vector<Field>& u, const std::vector<std::vector<Field>>& du,
                         const std::vector<Field>& Y) {
    const int N = target.N;
    if (int(u.size()) != N || int(du.size()) != N) throw Error("lagrangian_density: component count mismatch");
    const std::size_t sz = u[0].size();
    const int d = int(Y.size());
    Field L(sz);
    std::vector<double> y(N), g(N * N), yu(N);
    for (std::size_t q = 0; q < sz; ++q) {
        for (int I = 0; I < N; ++I) {
            y[I] = u[I][q];
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += Y[a][q] * du[I][a][q];
            yu[I] = s;
        }
        target.metric(y.data(), g.data());
        double l = 0.0;
        for (int I = 0; I < N; ++I)
            for (int J = 0; J < N; ++J) l += g[I * N + J] * yu[I] * yu[J];
        L[q] = l;
    }
    return L;
}

LadderLimit ladder_limit(const std::vector<double>& v) {
    if (v.size() < 3) throw Error("ladder shorter than 3 levels");
    LadderLimit r;
    r.levels = v;
    const std::size_t f = v.size() - 1;
    r.limit = 2.0 * v[f] - v[f - 1];
    const auto [lo, hi] = std::minmax({v[f], v[f - 1], v[f - 2]});
    r.error_bar = hi - lo;
    return r;
}

LadderLimit lagrangian_defect(const Target& target, const std::vector<WaveMapLevel>& levels, const WaveMapLevel& limit,
                              const std::vector<Field>& Y) {
    if (levels.size() < 3) throw Error("lagrangian_defect: ladder shorter than 3 levels");
    auto value = [&](const WaveMapLevel& l) {
        Field L = lagrangian_density(target, l.u, l.du, Y);
        const Field& sg = l.g->sqrtdet();
        for (std::size_t q = 0; q < L.size(); ++q) L[q] *= sg[q];
        return integrate(l.g->grid(), L);
    };
    const double base = value(limit);
    std::vector<double> v;
    for (const auto& l : levels) v.push_back(value(l) - base);
    return ladder_limit(v);
}

}  // namespace blab
