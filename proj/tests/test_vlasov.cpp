#include <cmath>
#include <cstdio>
#include <fstream>

#include "blab/vlasov.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace blab;

namespace {

double gauss_a0(const double* y) {
    const double d = y[0] - kPi;
    return std::exp(-2.0 * d * d);
}

Particle particle(Point x, std::array<double, 3> xi, double w = 1.0) {
    Particle p;
    p.x = x;
    p.xi = xi;
    p.w = w;
    return p;
}

double shell(const MetricModel& g, const Particle& q) {
    const Mat gi = g.inverse(q.x);
    double h = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) h += gi(a, b) * q.xi[a] * q.xi[b];
    return h;
}

MetricModel curved_unit_density() {
    return unit_density_1d([](const Point& p) { return 1.0 + 0.2 * std::sin(p[1]); });
}

TestSymbol bump_symbol(Point c, double s, std::array<double, 3> k, std::array<double, 3> kc, double c3) {
    return odd_symbol(1, bump_window(1, c, s, kTwoPi), bump_window_gradient(1, c, s, kTwoPi), k, kc, c3);
}

}  // namespace

TEST_CASE("push: Minkowski flow is a straight line") {
    RayBundle b;
    b.T = 10.0;
    b.p.push_back(particle({0.5, 1.0, 0.0}, {-1.0, 0.3, 0.0}));
    b.p.push_back(particle({1.0, 6.0, 0.0}, {-2.0, -2.0, 0.0}));
    const std::vector<Particle> start = b.p;
    const double ds = 0.01;
    push(b, minkowski(1), ds, 100);
    for (std::size_t i = 0; i < start.size(); ++i) {
        const Particle& s = start[i];
        // x' = g^{-1} xi = (-xi_0, xi_1)
        const double t = s.x[0] - s.xi[0];
        const double x = std::fmod(s.x[1] + s.xi[1] + 2 * kTwoPi, kTwoPi);
        CHECK(b.p[i].x[0] == doctest::Approx(t).epsilon(1e-13));
        CHECK(b.p[i].x[1] == doctest::Approx(x).epsilon(1e-13));
        CHECK(b.p[i].xi[0] == s.xi[0]);
        CHECK(b.p[i].xi[1] == s.xi[1]);
        CHECK(b.p[i].active);
    }
}

TEST_CASE("push: leaving the slab deactivates") {
    RayBundle b;
    b.T = 1.0;
    b.p.push_back(particle({0.5, 1.0, 0.0}, {-1.0, 1.0, 0.0}));
    b.p.push_back(particle({0.5, 1.0, 0.0}, {1.0, 1.0, 0.0}));  // x0-dot < 0
    push(b, minkowski(1), 0.1, 10);
    CHECK_FALSE(b.p[0].active);
    CHECK_FALSE(b.p[1].active);
    CHECK(radial_project(b, make_cells(SpacetimeGrid{1, 1.0, kTwoPi, 8, 8}, 1, 1, 0.0), default_bins(1)).total() == 0.0);
}

TEST_CASE("push: conformally flat null rays stay null, fourth order in ds") {
    const MetricModel g = conformally_flat(1, [](const Point& p) { return 1.0 + 0.2 * std::sin(p[1]) * std::cos(p[0]); });
    const double dx = kTwoPi / 256;
    // affine length 1 in `steps` steps
    auto run = [&](int steps, Particle q) {
        RayBundle b;
        b.T = 10.0;
        b.p.push_back(q);
        push(b, g, 1.0 / steps, steps);
        return b.p[0];
    };
    const Mat gi = g.inverse({0.1, 2.0, 0.0});
    const double xs = 1.0;
    const Particle null0 = particle({0.1, 2.0, 0.0}, {null_xi0(gi, &xs, Branch::future), xs, 0.0});
    CHECK(std::abs(shell(g, null0)) < 1e-14);
    const Particle a = run(int(std::ceil(1.0 / dx)), null0);
    CHECK(a.active);
    CHECK(std::abs(shell(g, a)) < 1e-10);

    // position error against a ds/10 run
    const Particle timelike = particle({0.1, 2.0, 0.0}, {-1.5, 0.5, 0.0});
    const Particle ref = run(1280, timelike);
    const Particle c1 = run(32, timelike), c2 = run(64, timelike);
    const double e1 = std::hypot(c1.x[0] - ref.x[0], c1.x[1] - ref.x[1]);
    const double e2 = std::hypot(c2.x[0] - ref.x[0], c2.x[1] - ref.x[1]);
    const double order = std::log2(e1 / e2);
    MESSAGE("rk4 order " << order);
    CHECK(order > 3.6);
    CHECK(std::abs(shell(g, c2) - shell(g, timelike)) < 1e-9);
}

TEST_CASE("radial_project: empty bundle and homogeneity of the deposit") {
    const SpacetimeGrid grid{1, 2.0, kTwoPi, 16, 16};
    const CellLattice cells = make_cells(grid, 2, 3, 0.0);
    const DirectionBins bins = default_bins(1);
    RayBundle b = make_bundle(grid);
    const DefectMeasureHistogram h0 = radial_project(b, cells, bins);
    CHECK(h0.total() == 0.0);

    const Vec c = bins.center(5);
    b.p.push_back(particle({1.0, 2.0, 0.0}, {2 * c[0], 2 * c[1], 0.0}));
    const DefectMeasureHistogram h = radial_project(b, cells, bins);
    double at5 = 0.0, cross = 0.0;
    for (int k = 0; k < cells.count(); ++k) {
        at5 += h.nu[h.at(k, 5)];
        cross += h.t(k, 5, 0, 1).real();
    }
    // t = 1 is inside the region where sum b_c^2 = 1
    CHECK(at5 == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(h.total() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(cross == doctest::Approx(4.0 * c[0] * c[1]).epsilon(1e-12));
}

TEST_CASE("radial_project: bundles drawn from a WKB family reproduce the reference measure") {
    const SpacetimeGrid g{1, kTwoPi, kTwoPi, 128, 128};
    const MetricModel gm = curved_unit_density();
    const PhaseField ph = eikonal_solve(gm, g, plane_phase({1.0}));
    const Field a = transport_solve(ph, gauss_a0);
    const WkbFamily fam = sample_family(ph, a, {1.0 / 4, 1.0 / 8, 1.0 / 16}, 1.0);
    const CellLattice cells = make_cells(g, 3, 4, 0.3);
    const DirectionBins bins = default_bins(1);
    const DefectMeasureHistogram ref = reference_measure(fam, cells, bins);

    const RayBundle full = bundle_from_family(fam);
    CHECK(full.max_shell(gm) < 1e-6);
    CHECK(relative_l1(radial_project(full, cells, bins), ref) < 1e-12);

    // per-draw relative spread of the deposited mass, from the family itself
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
        const int k = int(q / g.slice_size());
        const double wt = (k == 0 || k == g.Nt) ? 0.5 : 1.0;
        const double z = wt * a[q] * a[q] * (ph.dphi[0][q] * ph.dphi[0][q] + ph.dphi[1][q] * ph.dphi[1][q]);
        m1 += z;
        m2 += z * z;
    }
    m1 /= double(g.size());
    m2 /= double(g.size());
    const double spread = std::sqrt(m2 - m1 * m1) / m1;
    // deposited mass without windows
    auto mass = [](const RayBundle& b) {
        double s = 0.0;
        for (const Particle& q : b.p) s += q.w * (q.xi[0] * q.xi[0] + q.xi[1] * q.xi[1]);
        return s;
    };
    const double full_mass = mass(full);
    for (std::size_t n : {2000u, 32000u}) {
        const double se = spread / std::sqrt(double(n));
        const double tot = std::abs(mass(sample_bundle(fam, n, 7)) / full_mass - 1.0);
        const double l1 = relative_l1(radial_project(sample_bundle(fam, n, 7), cells, bins), ref);
        MESSAGE("N " << n << " total " << tot << " (se " << se << ") L1 " << l1);
        CHECK(tot < 3.0 * se);
        CHECK(l1 < 3.0 * spread * std::sqrt(double(cells.count())) / std::sqrt(double(n)));
    }
}

TEST_CASE("sweep_project: transported slice equals the space-time measure") {
    const SpacetimeGrid g{1, kTwoPi, kTwoPi, 128, 128};
    const CellLattice cells = make_cells(g, 3, 4, 0.3);
    const DirectionBins bins = default_bins(1);
    SUBCASE("Minkowski straight lines") {
        const PhaseField ph = eikonal_solve(minkowski(1), g, plane_phase({1.0}));
        const WkbFamily fam = sample_family(ph, transport_solve(ph, gauss_a0), {1.0 / 4, 1.0 / 8, 1.0 / 16}, 1.0);
        const DefectMeasureHistogram ref = reference_measure(fam, cells, bins);
        const DefectMeasureHistogram h = sweep_project(slice_bundle(fam, minkowski(1), 0), minkowski(1), g, 0, g.Nt,
                                                       cells, bins, 1);
        CHECK(relative_l1(h, ref) < 1e-10);
    }
    SUBCASE("curved unit-density metric") {
        const MetricModel gm = curved_unit_density();
        const PhaseField ph = eikonal_solve(gm, g, plane_phase({1.0}));
        const WkbFamily fam = sample_family(ph, transport_solve(ph, gauss_a0), {1.0 / 4, 1.0 / 8, 1.0 / 16}, 1.0);
        const DefectMeasureHistogram ref = reference_measure(fam, cells, bins);
        const DefectMeasureHistogram h = sweep_project(slice_bundle(fam, gm, 0), gm, g, 0, g.Nt, cells, bins);
        const double err = relative_l1(h, ref);
        MESSAGE("curved sweep L1 " << err);
        CHECK(err < 0.02);
    }
}

TEST_CASE("vlasov_residual: zero measure, x-independent symbol, linearity") {
    const SpacetimeGrid g{1, 2.0, kTwoPi, 16, 16};
    const CellLattice cells = make_cells(g, 2, 4, 0.0);
    const DirectionBins bins = default_bins(1);
    const TestSymbol a = bump_symbol({1.0, 2.0, 0.0}, 0.7, {0.3, 1.0, 0.0}, {1.0, -0.5, 0.0}, 0.4);
    CHECK(a.homogeneity_defect(1) < 1e-10);
    const DefectMeasureHistogram zero(cells, bins, 2);
    const MetricModel gm = curved_unit_density();
    CHECK(vlasov_residual(zero, gm, a) == 0.0);

    // Minkowski, uniform in x at one bin, a independent of x
    DefectMeasureHistogram h(cells, bins, 2);
    for (int c = 0; c < cells.count(); ++c) h.nu[h.at(c, 4)] = 1.0;
    TestSymbol flat = a;
    flat.b = [](const Point&) { return 1.0; };
    flat.db = [](const Point&, double* o) { o[0] = o[1] = o[2] = 0.0; };
    CHECK(vlasov_residual(h, minkowski(1), flat) == 0.0);

    // linear in nu and in a
    for (int c = 0; c < cells.count(); ++c)
        for (int d = 0; d < bins.count(); ++d) h.nu[h.at(c, d)] = 1.0 + 0.1 * c + 0.01 * d * d;
    DefectMeasureHistogram h2 = h;
    for (double& v : h2.nu) v *= 3.0;
    const double r1 = vlasov_residual(h, gm, a);
    CHECK(std::abs(r1) > 1e-6);
    CHECK(vlasov_residual(h2, gm, a) == doctest::Approx(3.0 * r1).epsilon(1e-12));
    const TestSymbol b2 = bump_symbol({1.0, 2.0, 0.0}, 0.7, {-1.0, 0.2, 0.0}, {0.0, 1.0, 0.0}, 1.0);
    TestSymbol sum = a;
    sum.m = [&](const double* xi) { return a.m(xi) + b2.m(xi); };
    sum.dm = [&](const double* xi, double* o) {
        double u[3], v[3];
        a.dm(xi, u);
        b2.dm(xi, v);
        for (int i = 0; i < 3; ++i) o[i] = u[i] + v[i];
    };
    CHECK(vlasov_residual(h, gm, sum) ==
          doctest::Approx(vlasov_residual(h, gm, a) + vlasov_residual(h, gm, b2)).epsilon(1e-12));
}

TEST_CASE("symbol_residual: WKB wave family versus a non-solution control") {
    const SpacetimeGrid g{1, kTwoPi, kTwoPi, 256, 256};
    const MetricModel gm = curved_unit_density();
    const MetricSamples ms = sample_metric(g, gm);
    const std::vector<TestSymbol> syms{bump_symbol({kPi, 2.5, 0.0}, 0.6, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, 0.5),
                                       bump_symbol({2.5, 3.5, 0.0}, 0.8, {1.0, 0.5, 0.0}, {0.0, 1.0, 0.0}, 1.0)};
    const PhaseField ph = eikonal_solve(gm, g, plane_phase({1.0}));
    const std::vector<double> eps{1.0 / 8, 1.0 / 16, 1.0 / 32};
    const WkbFamily fam = sample_family(ph, transport_solve(ph, gauss_a0), eps, 1.0);
    for (const TestSymbol& s : syms) {
        std::vector<double> rel;
        for (std::size_t l = 0; l < eps.size(); ++l) {
            const std::vector<Field> v = fam.gradient(l);
            rel.push_back(symbol_residual(PairingEngine(g, v), ms, v, {}, s).relative());
        }
        MESSAGE("relative residuals " << rel[0] << " " << rel[1] << " " << rel[2]);
        CHECK(rel[2] < rel[0]);
        CHECK(rel[2] < 0.1);
    }
    // u = eps a(x) cos(x / eps) does not solve the wave equation: its measure is not transported
    const double e = 1.0 / 32;
    const std::vector<Field> v{Field(g.size(), 0.0), sample(g, [e](const Point& p) {
                                   const double y = p[1] - kPi, A = std::exp(-2.0 * y * y);
                                   return -A * std::sin(p[1] / e) - 4.0 * e * y * A * std::cos(p[1] / e);
                               })};
    const SymbolResidual r = symbol_residual(PairingEngine(g, v), ms, v, {}, syms[0]);
    MESSAGE("control " << r.relative());
    CHECK(r.relative() > 0.3);
}

TEST_CASE("bundle CSV") {
    RayBundle b;
    b.p.push_back(particle({0.25, 1.0, 0.0}, {-1.0, 1.0, 0.0}, 0.5));
    b.p.push_back(particle({0.5, 2.0, 0.0}, {1.0, 1.0, 0.0}, 2.0));
    b.p[1].active = false;
    const std::string path = "test_bundle.csv";
    write_bundle_csv(path, b, "# header\n");
    std::ifstream is(path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == "x0,x1,xi0,xi1,w,active");
    CHECK(lines[3].substr(lines[3].size() - 2) == ",0");
    std::remove(path.c_str());
}
