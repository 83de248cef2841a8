#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "blab/geometry.hpp"
#include "blab/measure.hpp"
#include "blab/microlocal.hpp"
#include "blab/wkb.hpp"

namespace blab {

struct Particle {
    Point x{};
    std::array<double, 3> xi{};  // xi_alpha, alpha = 0..n
    double w = 0.0;
    bool active = true;
};

struct RayBundle {
    int n = 1;
    std::vector<Particle> p;
    double T = 1.0, L = kTwoPi;  // slab the particles live in

    double total_weight() const;
    // max |g^{ab} xi_a xi_b| / |xi|_e^2 over active particles
    double max_shell(const MetricModel& g) const;
};

RayBundle make_bundle(const SpacetimeGrid& g);

// a(x, xi) = b(x) m(xi), m positively 1-homogeneous. Gradients are analytic.
struct TestSymbol {
    std::function<double(const Point&)> b;
    std::function<void(const Point&, double*)> db;     // d_alpha b
    std::function<double(const double*)> m;
    std::function<void(const double*, double*)> dm;    // d m / d xi_mu (0-homogeneous)

    double value(const Point& x, const double* xi) const { return b(x) * m(xi); }
    // Max |a(x, c xi) - c a(x, xi)| / max(1, |a|) over sampled points and c.
    double homogeneity_defect(int n, std::uint64_t seed = 1) const;
};

// m(xi) = k . xi + c3 (k' . xi)^3 / |xi|_e^2: odd and 1-homogeneous.
TestSymbol odd_symbol(int n, std::function<double(const Point&)> b, std::function<void(const Point&, double*)> db,
                      std::array<double, 3> k, std::array<double, 3> kc, double c3);

// Gaussian bump exp(-|x - c|^2 / (2 s^2)) (space periodic) and its gradient.
std::function<double(const Point&)> bump_window(int n, Point c, double s, double L);
std::function<void(const Point&, double*)> bump_window_gradient(int n, Point c, double s, double L);

// RK4 for x' = g^{ab} xi_b, xi_mu' = -1/2 d_mu g^{ab} xi_a xi_b in the affine
// parameter. Space wraps; leaving [0, T] deactivates the particle.
void push(RayBundle& b, const MetricModel& g, double ds, int steps);
// Same flow reparametrised by t (x^0 as parameter), to time t1 in `steps` RK4
// steps; particles with x0-dot = 0 are deactivated.
void push_to_time(RayBundle& b, const MetricModel& g, double t1, int steps);

// Deposit w |xi|_e^2 b_c(x)^2 m_d(xi^) into (c, d) with nu-tilde = xi^ xi^ nu.
DefectMeasureHistogram radial_project(const RayBundle& b, const CellLattice& cells, const DirectionBins& bins);

// Bundle with one particle pair (+-d phi) per slab grid point; weight a^2/4 dV
// with trapezoid end weights. Projecting it reproduces reference_measure.
RayBundle bundle_from_family(const WkbFamily& fam);
// n random grid points (with the +- pair at each), weights rescaled to the slab volume.
RayBundle sample_bundle(const WkbFamily& fam, std::size_t n, std::uint64_t seed);
// One pair per spatial point of time level k, weighted as slice flux a^2/4 |x0-dot| dx.
RayBundle slice_bundle(const WkbFamily& fam, const MetricModel& g, int k);

// Transport a slice bundle (from slice_bundle at level k0) through levels k0..k1
// and deposit its space-time measure: at each level w / |x0-dot| times the
// trapezoid dt weight.
DefectMeasureHistogram sweep_project(RayBundle b, const MetricModel& g, const SpacetimeGrid& grid, int k0, int k1,
                                     const CellLattice& cells, const DirectionBins& bins, int substeps = 4);

// Bin-centre quadrature of
//   int [g^{ab} xi_a d_b a - 1/2 d_mu g^{ab} xi_a xi_b d_{xi_mu} a] d nu + int a d(Re lambda)
// with x at cell centres and xi at unit bin centres. lambda optional.
double vlasov_residual(const DefectMeasureHistogram& nu, const MetricModel& g, const TestSymbol& a,
                       const DefectMeasureHistogram* lambda = nullptr);

// The same functional evaluated on one ladder level by separable symbol pairings
// against the fields (no binning). transport is the sum of the absolute values of
// the separate component terms, used as the normalisation.
struct SymbolResidual {
    double residual = 0.0;
    double transport = 0.0;
    double source = 0.0;
    double relative() const { return transport > 0.0 ? std::abs(residual) / transport : std::abs(residual); }
};

// Metric coefficients g^{ab}, d_mu g^{ab} sampled on a grid once for many pairings.
struct MetricSamples {
    SpacetimeGrid grid;
    std::vector<Field> ginv;               // lexicographic
    std::vector<std::vector<Field>> dginv; // [mu][sym]
};
MetricSamples sample_metric(const SpacetimeGrid& grid, const MetricModel& g);

// eng holds v_0..v_n and, when f is nonempty, f as field n + 1.
SymbolResidual symbol_residual(const PairingEngine& eng, const MetricSamples& ms, const std::vector<Field>& v,
                               const Field& f, const TestSymbol& a);

void write_bundle_csv(const std::string& path, const RayBundle& b, const std::string& header);

}  // namespace blab
