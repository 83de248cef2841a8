#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blab/grid.hpp"

namespace blab {

// Analytic metric g_{ab}(x): used wherever off-grid evaluation is needed
// (ray tracing, particle push, per-step solver coefficients).
struct MetricModel {
    int n = 1;
    std::function<Mat(const Point&)> g;
    std::string name = "custom";

    Mat lower(const Point& p) const { return g(p); }
    Mat inverse(const Point& p) const;
    // d/dx^mu of g^{ab}, fourth-order central differences of the callable.
    Mat dinverse(const Point& p, int mu) const;
    double sqrt_det(const Point& p) const;
};

MetricModel minkowski(int n);
// Constant metric obtained by boosting Minkowski with velocity v along x^1.
MetricModel boosted_minkowski(int n, double v);
// -N(x)^2 dt^2 + h_ij(x) dx^i dx^j with diagonal spatial part given per axis.
MetricModel static_diagonal(int n, std::function<double(const Point&)> lapse,
                            std::function<double(const Point&, int)> spatial);
// -h(x) dt^2 + h(x)^{-1} dx^2 (n = 1): curved, with sqrt|g| = 1.
MetricModel unit_density_1d(std::function<double(const Point&)> h);
// Omega(x)^2 times Minkowski.
MetricModel conformally_flat(int n, std::function<double(const Point&)> omega);

// Cauchy frame at one point from the inverse metric.
struct FramePoint {
    double N = 1.0;
    Vec beta;
    Mat gtilde;  // spatial inverse metric
};
FramePoint frame_from_inverse(const Mat& ginv);
double lightcone_form(const FramePoint& f, double ginv00, const Vec& xi);

// Number of independent components of a symmetric (1+n)x(1+n) tensor and their
// lexicographic (a <= b) ordering.
int sym_count(int dim);
int sym_index(int dim, int a, int b);

class MetricField {
public:
    MetricField() = default;
    static MetricField from_model(const SpacetimeGrid& grid, const MetricModel& m);
    // comps in lexicographic (a <= b) order
    static MetricField from_components(const SpacetimeGrid& grid, std::vector<Field> comps);

    const SpacetimeGrid& grid() const { return grid_; }
    int dim() const { return grid_.n + 1; }
    const Field& g(int a, int b) const { return comps_[sym_index(dim(), a, b)]; }
    const Field& ginv(int a, int b) const { return inv_[sym_index(dim(), a, b)]; }
    const Field& lapse() const { return N_; }
    const Field& shift(int i) const { return beta_[i - 1]; }  // i in 1..n
    const Field& gtilde(int i, int j) const { return gt_[sym_index(grid_.n, i - 1, j - 1)]; }
    const Field& sqrtdet() const { return sqrtdet_; }
    const std::vector<Field>& components() const { return comps_; }

    Mat lower_at(std::size_t q) const;
    Mat inverse_at(std::size_t q) const;

private:
    void build_caches();
    SpacetimeGrid grid_;
    std::vector<Field> comps_, inv_, gt_, beta_;
    Field N_, sqrtdet_;
};

struct CauchyFrame {
    Field N;
    std::vector<Field> beta;    // beta^i, i = 1..n stored at [i-1]
    std::vector<Field> gtilde;  // lexicographic spatial components
};
CauchyFrame cauchy_frame(const MetricField& g);

// Divergence form (1/sqrt|g|) d_a(sqrt|g| g^{ab} d_b u).
Field box_apply(const MetricField& g, const Field& u);
// Frame form built from e_0 = d_0 - beta^i d_i.
Field box_apply_frame(const MetricField& g, const Field& u);

double mass_shell(const MetricField& g, std::size_t q, const Vec& xi);
double mass_shell(const Mat& ginv, const Vec& xi);

// Per-slice coefficients used by the wave solver.
struct SliceCoefficients {
    SpatialGrid s;
    double t = 0.0;
    Field sqrtg, ginv00, N;
    std::vector<Field> beta;  // beta^i
    std::vector<Field> gt;    // gtilde^{ij}, lexicographic
    std::vector<Field> ginv;  // full inverse, lexicographic over 0..n
};
SliceCoefficients slice_coefficients(const SpatialGrid& s, const MetricModel& m, double t);
SliceCoefficients slice_coefficients(const MetricField& g, int k);

// Maximum coordinate light speed |beta^i| + N sqrt(gtilde^{ii}) over a slice.
double max_light_speed(const SliceCoefficients& c);

struct OscillatingMetricFamily {
    MetricModel base;
    std::function<Mat(const Point&)> shape;
    std::function<double(const Point&)> phase;
    std::vector<double> lambdas;

    MetricModel level(std::size_t k) const;
    double lambda(std::size_t k) const { return lambdas.at(k); }
    std::size_t depth() const { return lambdas.size(); }
};

std::vector<double> geometric_ladder(double x0, double ratio, int depth);

// Builds the family and checks every level on the grid (g^{00} < 0, gtilde
// eigenvalues within [1e-3, 1e3]). Throws naming the offending level.
OscillatingMetricFamily oscillating_family(const MetricModel& base, std::function<Mat(const Point&)> shape,
                                           std::function<double(const Point&)> phase,
                                           std::vector<double> lambdas, const SpacetimeGrid& check_grid);

struct MetricValidity {
    bool ok = true;
    std::string message;
};
MetricValidity check_metric(const SpacetimeGrid& grid, const MetricModel& m);

struct BurnettReport {
    std::vector<double> lambdas;
    std::vector<std::vector<double>> norms;  // norms[k][level], k = 0, 1, 2
    std::vector<SlopeFit> slopes;            // per k
    std::vector<double> constants;           // max_level norms[k] / lambda^{1-k}
    std::vector<bool> bound_ok;              // per k
    std::vector<double> product;             // ||h||_inf ||d^2 (u - u0)||_L4 per level (when supplied)
    SlopeFit product_slope;
    bool product_ok = true;
    bool all_ok() const;
};

// Metric ladder: norms of d^k (g_eps - g) over all components.
BurnettReport burnett_rate_check(const OscillatingMetricFamily& fam, const SpacetimeGrid& grid);
// Field ladder: norms of d^k (u_eps - u0); `h_sup` optionally supplies ||h_eps||_inf
// per level for the product hypothesis.
BurnettReport burnett_rate_check(const SpacetimeGrid& grid, const std::vector<double>& lambdas,
                                 const std::vector<Field>& fields, const Field* limit = nullptr,
                                 const std::vector<double>* h_sup = nullptr);

// Spacetime Ricci tensor of a metric field by finite differences.
std::vector<Field> ricci_tensor(const MetricField& g);
// Ricci tensor (lexicographic components) of any metric given its lower
// components and a coordinate derivative operator d(f, a).
std::vector<Field> ricci_generic(int dim, const std::vector<Field>& comps,
                                 const std::function<Field(const Field&, int)>& d);

}  // namespace blab
