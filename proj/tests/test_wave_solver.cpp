#include <cmath>
#include <random>

#include "blab/wave_solver.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace blab;

namespace {

auto curved_shift = [](auto t, auto x, auto) {
    using std::cos;
    using std::sin;
    using S = decltype(t * x);
    S g00 = -(1.0 + 0.1 * sin(x) * cos(t));
    S g01 = 0.2 * sin(x + t);
    S g11 = 1.0 + 0.1 * sin(x);
    return std::vector<std::vector<S>>{{g00, g01}, {g01, g11}};
};

auto manufactured_u = [](auto t, auto x, auto) {
    using std::cos;
    using std::sin;
    return sin(x) * cos(0.7 * t) + 0.3 * cos(2.0 * x + t);
};

Field slice_of(const SpatialGrid& s, const std::function<double(double)>& f) {
    Field r(s.size());
    for (int i = 0; i < s.Nx; ++i) r[i] = f(s.x(i));
    return r;
}

// e0 u = d_t u - beta^i d_i u from the jet oracle.
double frame_derivative(const oracle::MetricFn& g, const oracle::ScalarFn& u, double t, double x) {
    const oracle::Eval e = oracle::evaluate(g, u, t, x, 0.0);
    const double beta = -e.ginv[0][1].v / e.ginv[0][0].v;
    return e.u.g[0] - beta * e.u.g[1];
}

}  // namespace

TEST_CASE("cfl_dt") {
    const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 4, 628};
    const double dx = 0.01;
    const MetricField mink = MetricField::from_model(G, minkowski(1));
    CHECK(cfl_dt(mink, dx) == doctest::Approx(0.005).epsilon(1e-12));
    const MetricModel fast = static_diagonal(1, [](const Point&) { return 2.0; }, [](const Point&, int) { return 1.0; });
    CHECK(cfl_dt(MetricField::from_model(G, fast), dx) == doctest::Approx(0.0025).epsilon(1e-12));
    CHECK_THROWS_AS(cfl_dt(mink, 0.0), Error);
    CHECK(cfl_dt(minkowski(1), G) == doctest::Approx(0.5 * G.dx()).epsilon(1e-12));
}

TEST_CASE("linear: d'Alembert null wave, second order") {
    auto F = [](double s) { return std::exp(std::sin(s)); };
    auto Fp = [](double s) { return std::cos(s) * std::exp(std::sin(s)); };
    std::vector<double> h, err;
    for (int Nx : {64, 128, 256}) {
        const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 4, Nx};
        const SpatialGrid S = G.spatial();
        const Evolution ev = evolve_linear(minkowski(1), G, slice_of(S, F), slice_of(S, [&](double x) { return -Fp(x); }));
        const Field exact = sample(G, [&](const Point& p) { return F(p[1] - p[0]); });
        h.push_back(G.dx());
        err.push_back(th::interior_max(G, ev.u[0], exact, 0));
    }
    CHECK(err.back() < 1e-3);
    CHECK(th::observed_order(h, err) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("linear: manufactured forcing on a curved metric with shift") {
    const MetricModel m = th::model(1, curved_shift);
    const auto jm = th::jet_metric(curved_shift);
    const auto ju = th::jet_scalar(manufactured_u);
    std::vector<double> h, err;
    for (int Nx : {64, 128, 256}) {
        const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 4, Nx};
        const SpatialGrid S = G.spatial();
        const Field u0 = slice_of(S, [&](double x) { return manufactured_u(0.0, x, 0.0); });
        const Field v0 = slice_of(S, [&](double x) { return frame_derivative(jm, ju, 0.0, x); });
        SourceFn f = [&](double t) { return slice_of(S, [&](double x) { return oracle::box(jm, ju, t, x); }); };
        const Evolution ev = evolve_linear(m, G, u0, v0, f);
        const Field exact = th::sample_scalar(G, manufactured_u);
        h.push_back(G.dx());
        err.push_back(th::interior_max(G, ev.u[0], exact, 0));
    }
    CHECK(th::observed_order(h, err) > 1.8);
    CHECK(err.back() < 1e-3);
}

TEST_CASE("linear: zero data stays zero") {
    const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 4, 32};
    const Field z(G.slice_size(), 0.0);
    const Evolution ev = evolve_linear(th::model(1, curved_shift), G, z, z);
    CHECK(sup_norm(ev.u[0]) == 0.0);
    CHECK(sup_norm(ev.v[0]) == 0.0);
}

TEST_CASE("wave map: flat target reproduces the linear step bit for bit") {
    const SpatialGrid S{1, 2.0 * kPi, 48};
    const WaveContext ctx(th::model(1, curved_shift), S);
    const Field u0 = slice_of(S, [](double x) { return std::sin(x) + 0.2 * std::cos(3 * x); });
    const Field v0 = slice_of(S, [](double x) { return 0.5 * std::cos(2 * x); });
    SourceFn f = [&](double t) { return slice_of(S, [&](double x) { return std::sin(x + t); }); };
    MultiSourceFn mf = [&](double t) { return std::vector<Field>{f(t)}; };
    WaveState a = make_state(ctx, 0.0, u0, v0);
    WaveMapState b{{make_state(ctx, 0.0, u0, v0)}};
    const Target flat = flat_target(1);
    for (int k = 0; k < 20; ++k) {
        step_linear(ctx, a, f, 0.02);
        step_wavemap(ctx, flat, b, mf, 0.02);
    }
    CHECK(a.u == b.comp[0].u);
    CHECK(a.p == b.comp[0].p);
}

TEST_CASE("wave map: constant map is a fixed point") {
    const SpatialGrid S{2, 2.0 * kPi, 16};
    const WaveContext ctx(conformally_flat(2, [](const Point& p) { return 1.0 + 0.1 * std::sin(p[1]); }), S);
    WaveMapState st{{make_state(ctx, 0.0, Field(S.size(), 0.3), Field(S.size(), 0.0)),
                     make_state(ctx, 0.0, Field(S.size(), 1.2), Field(S.size(), 0.0))}};
    const Target P = poincare_target();
    for (int k = 0; k < 10; ++k) step_wavemap(ctx, P, st, {}, 0.05);
    for (double v : st.comp[0].u) CHECK(v == 0.3);
    for (double v : st.comp[1].u) CHECK(v == 1.2);
}

TEST_CASE("wave map: Poincare target with omega = 0 is the linear wave for psi") {
    const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 8, 64};
    const SpatialGrid S = G.spatial();
    const MetricModel m = th::model(1, curved_shift);
    const Field psi0 = slice_of(S, [](double x) { return 0.5 * std::sin(x); });
    const Field v0 = slice_of(S, [](double x) { return 0.2 * std::cos(x); });
    const Field z(S.size(), 0.0);
    const Evolution lin = evolve_linear(m, G, psi0, v0);
    const Evolution wm = evolve_wavemap(m, poincare_target(), G, {psi0, z}, {v0, z});
    CHECK(th::interior_max(G, lin.u[0], wm.u[0], 0) < 1e-12);
    CHECK(sup_norm(wm.u[1]) == 0.0);
}

TEST_CASE("wave map: chart bound halts with the step index") {
    const SpatialGrid S{1, 2.0 * kPi, 32};
    const WaveContext ctx(minkowski(1), S);
    WaveMapState st{{make_state(ctx, 0.0, Field(S.size(), 25.0), Field(S.size(), 0.0)),
                     make_state(ctx, 0.0, Field(S.size(), 0.0), Field(S.size(), 0.0))}};
    try {
        step_wavemap(ctx, poincare_target(), st, {}, 0.05);
        FAIL("expected a chart-bound error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}

TEST_CASE("poincare target: Christoffel symbols of the target metric") {
    using oracle::Jet;
    const Target P = poincare_target();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double y[2] = {U(rng), U(rng)};
        const Jet psi = Jet::var(y[0], 0);
        const Jet gww = 0.5 * exp(-4.0 * psi);
        // d_I g_JK: only d_psi g_ww is nonzero
        double dg[2][2][2] = {};
        dg[0][1][1] = gww.g[0];
        const double ginv[2] = {0.5, 1.0 / gww.v};
        double G[8], g[4];
        P.christoffel(y, G);
        P.metric(y, g);
        CHECK(g[3] == doctest::Approx(gww.v).epsilon(1e-14));
        for (int I = 0; I < 2; ++I)
            for (int J = 0; J < 2; ++J)
                for (int K = 0; K < 2; ++K) {
                    const double ref = 0.5 * ginv[I] * (dg[J][I][K] + dg[K][I][J] - dg[I][J][K]);
                    worst = std::max(worst, std::abs(G[(I * 2 + J) * 2 + K] - ref) / std::max(1.0, std::abs(ref)));
                }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("stress_current: trivial examples and polarization") {
    const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 8, 32};
    const MetricField mink = MetricField::from_model(G, minkowski(1));
    const Field t = sample(G, [](const Point& p) { return p[0]; });
    const std::vector<Field> X{Field(G.size(), 1.0), Field(G.size(), 0.0)};
    const EnergyDensity E = stress_current(mink, t, t, X);
    CHECK(E.T[sym_index(2, 0, 0)][5] == doctest::Approx(0.5));
    CHECK(E.T[sym_index(2, 0, 1)][5] == doctest::Approx(0.0));
    CHECK(E.T[sym_index(2, 1, 1)][5] == doctest::Approx(0.5));
    CHECK(E.J[0][5] == doctest::Approx(0.5));

    const MetricField g = MetricField::from_model(G, th::model(1, curved_shift));
    const Field a = sample(G, [](const Point& p) { return std::sin(p[1] - p[0]); });
    const Field b = sample(G, [](const Point& p) { return std::cos(2 * p[1]) * p[0]; });
    Field s(G.size()), d(G.size());
    for (std::size_t q = 0; q < G.size(); ++q) {
        s[q] = a[q] + b[q];
        d[q] = a[q] - b[q];
    }
    const std::vector<Field> Y{sample(G, [](const Point& p) { return 1.0 + 0.3 * std::sin(p[1]); }),
                               sample(G, [](const Point& p) { return 0.2 * std::cos(p[0]); })};
    const EnergyDensity ab = stress_current(g, a, b, Y), ba = stress_current(g, b, a, Y);
    const EnergyDensity ss = stress_current(g, s, s, Y), dd = stress_current(g, d, d, Y);
    double worst = 0.0;
    for (int al = 0; al < 2; ++al)
        for (std::size_t q = 0; q < G.size(); ++q) {
            worst = std::max(worst, std::abs(ab.J[al][q] - ba.J[al][q]));
            worst = std::max(worst, std::abs(ab.J[al][q] - 0.25 * (ss.J[al][q] - dd.J[al][q])));
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("energy identity residual: null plane waves on Minkowski") {
    std::vector<double> h, r;
    for (int N : {128, 256, 512}) {
        const SpacetimeGrid G{1, 2.0, 2.0 * kPi, N / 2, N};
        const MetricField g = MetricField::from_model(G, minkowski(1));
        const Field u = sample(G, [](const Point& p) { return std::sin(2.0 * (p[1] - p[0])); });
        const std::vector<Field> X{Field(G.size(), 1.0), Field(G.size(), 0.0)};
        const std::vector<Field> Xv{sample(G, [](const Point& p) { return 1.0 + 0.2 * std::sin(p[1]); }),
                                    sample(G, [](const Point& p) { return 0.3 * std::cos(p[1] - p[0]); })};
        const Field phi = sample(G, [](const Point& p) { return bump(p[0], 1.0, 0.8) * bump(p[1], 2.0, 1.0); });
        h.push_back(G.dx());
        r.push_back(energy_residual(g, u, u, Xv, phi));
        if (N == 128) {
            CHECK(energy_residual(g, u, u, X, Field(G.size(), 0.0)) == 0.0);
            // null form vanishes: T_ab = d_a u d_b u
            const EnergyDensity E = stress_current(g, u, u, X);
            const Field d0 = d_coord(G, u, 0), d1 = d_coord(G, u, 1);
            double worst = 0.0;
            for (std::size_t q = 0; q < G.size(); q += 7)
                worst = std::max(worst, std::abs(E.T[sym_index(2, 0, 1)][q] - d0[q] * d1[q]));
            CHECK(worst < 1e-2);
        }
    }
    CHECK(r.back() < 1e-4);
    CHECK(th::observed_order(h, r) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("energy identity residual: manufactured curved pair, second order") {
    const MetricModel m = th::model(1, curved_shift);
    std::vector<double> h, r;
    for (int N : {32, 64, 128}) {
        const SpacetimeGrid G{1, 2.0, 2.0 * kPi, N / 2, N};
        const MetricField g = MetricField::from_model(G, m);
        const Field u1 = th::sample_scalar(G, manufactured_u);
        const Field u2 = sample(G, [](const Point& p) { return std::cos(p[1] + 0.5 * p[0]) + 0.1 * p[0]; });
        const std::vector<Field> X{sample(G, [](const Point& p) { return 1.0 + 0.2 * std::sin(p[1]); }),
                                   sample(G, [](const Point& p) { return 0.3 * std::cos(p[1] - p[0]); })};
        const Field phi = sample(G, [](const Point& p) { return bump(p[0], 1.0, 0.8) * (1.0 + 0.5 * std::sin(p[1])); });
        h.push_back(G.dx());
        r.push_back(energy_residual(g, u1, u2, X, phi));
    }
    CHECK(th::observed_order(h, r) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("energy of a static shift-free metric is conserved") {
    const MetricModel m = static_diagonal(
        1, [](const Point& p) { return 1.0 + 0.1 * std::sin(p[1]); },
        [](const Point& p, int) { return 1.0 + 0.2 * std::cos(p[1]); });
    const SpatialGrid S{1, 2.0 * kPi, 128};
    const WaveContext ctx(m, S);
    WaveState st = make_state(ctx, 0.0, slice_of(S, [](double x) { return std::exp(std::sin(x)); }),
                              slice_of(S, [](double x) { return std::cos(2 * x); }));
    const double e0 = slice_energy(ctx, st);
    const double dt = cfl_dt(m, SpacetimeGrid{1, 1.0, S.L, 1, S.Nx});
    double drift = 0.0;
    while (st.t < 10.0) {
        step_linear(ctx, st, {}, dt);
        drift = std::max(drift, std::abs(slice_energy(ctx, st) - e0) / e0);
    }
    CHECK(drift < 1e-3);
}

TEST_CASE("lagrangian defect and ladder limit") {
    CHECK_THROWS_AS(ladder_limit({1.0, 0.5}), Error);
    const LadderLimit l = ladder_limit({4.0, 2.0, 1.0});
    CHECK(l.limit == 0.0);
    CHECK(l.error_bar == 3.0);

    const SpacetimeGrid G{1, 1.0, 2.0 * kPi, 8, 32};
    const MetricField g = MetricField::from_model(G, th::model(1, curved_shift));
    const Target P = poincare_target();
    WaveMapLevel base{&g, {}, {}};
    base.u = {sample(G, [](const Point& p) { return 0.1 * std::sin(p[1] - p[0]); }), Field(G.size(), 0.4)};
    for (const Field& u : base.u) base.du.push_back({d_coord(G, u, 0), d_coord(G, u, 1)});
    const std::vector<Field> Y{Field(G.size(), 1.0), Field(G.size(), 0.5)};
    const LadderLimit z = lagrangian_defect(P, {base, base, base}, base, Y);
    CHECK(z.limit == 0.0);
    CHECK(z.error_bar == 0.0);

    // flat target, u = t: L(Y, Y) = (Y^0)^2
    const Target F = flat_target(1);
    WaveMapLevel lin{&g, {sample(G, [](const Point& p) { return p[0]; })}, {}};
    lin.du = {{Field(G.size(), 1.0), Field(G.size(), 0.0)}};
    const Field L = lagrangian_density(F, lin.u, lin.du, Y);
    CHECK(sup_norm(L) == doctest::Approx(1.0));
}
