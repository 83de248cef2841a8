#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "blab/geometry.hpp"

namespace blab {

// Slice data of a spatially conformally flat metric
//   g = -N^2 dt^2 + e^{2 gamma} delta_ij (dx^i + beta^i dt)(dx^j + beta^j dt).
// Spatial symmetric tensors are stored lexicographically (11, 12[, 22]).
struct GaugeFields {
    SpatialGrid grid;
    Field N, gamma;
    std::vector<Field> beta;  // beta^i, i = 1..n at [i - 1]
    double tau = 0.0;         // mean curvature of the slice (maximal: 0)

    static GaugeFields flat(const SpatialGrid& g);
    void validate() const;  // N > 0, sizes
};

// Pointwise second fundamental form from N, d_i beta^k ([i][k]), gtilde_ij and
// e_0 gtilde_ij (both n x n).
struct FormPoint {
    Mat K, H;
    double tau = 0.0;
};
FormPoint second_form_point(double N, const Mat& dbeta, const Mat& gt, const Mat& e0gt);

struct SecondFundamentalForm {
    std::vector<Field> K, H;  // lexicographic
    Field tau;
    double trace_before = 0.0;  // max |gtilde^{ij} H_ij| before the trace-free projection
};
// e0gt: e_0 gtilde_ij fields, lexicographic. Rejects N <= 0.
SecondFundamentalForm second_form(const GaugeFields& f, const std::vector<Field>& e0gt);

// Christoffel symbols of e^{2 gamma} delta at one point: G[l][i][j] = Gamma^l_ij.
using Christoffel = std::array<std::array<std::array<double, 2>, 2>, 2>;
Christoffel conformal_christoffel(int n, const double* dgamma);

// -R~_ij and the trace line of a conformally flat slice metric.
struct ConformalRicci {
    std::vector<Field> R;  // R~_ij, lexicographic
    Field trace;           // gtilde^{ij} R~_ij
};
ConformalRicci conformal_ricci(const SpatialGrid& g, const Field& gamma);

// Matter inputs on the slice.
struct RicciInputs {
    Field R00;
    std::vector<Field> R0i;  // i = 1..n at [i - 1]
    Field trace;             // g^{ab} R_ab
    Field e0tau;             // empty: 0
};
RicciInputs vacuum_inputs(const SpatialGrid& g);

// Residuals (left side minus right side) of the beta, N and gamma equations.
struct EllipticResiduals {
    std::vector<Field> beta;
    Field N, gamma;
    double max_abs() const;
};
EllipticResiduals elliptic_residuals(const GaugeFields& f, const SecondFundamentalForm& k, const RicciInputs& in);

// -D~_k D~_i beta^k + D~_i D~_k beta^k for n = 2 in closed form (no derivatives of
// beta), and the same combination assembled naively from second differences.
std::vector<Field> beta_commutator(const GaugeFields& f);
std::vector<Field> beta_commutator_naive(const GaugeFields& f);

// R_ij of the space-time metric from slice quantities; e0H lexicographic.
std::vector<Field> spatial_ricci(const GaugeFields& f, const SecondFundamentalForm& k, const std::vector<Field>& e0H,
                                 const Field& e0tau);

// e^{-2 psi} g + e^{2 psi} (dx^3 + A_a dx^a)^2 as a 4 x 4 matrix at one point (n = 2).
Mat u1_metric(const Mat& g3, double psi, const Vec& A);
struct U1Split {
    Mat g;
    double psi = 0.0;
    Vec A;
};
U1Split u1_split(const Mat& g4);
// Componentwise assembly on a slab: returns the 10 components (a <= b, 4 x 4).
std::vector<Field> u1_assemble(const MetricField& g, const Field& psi, const std::vector<Field>& A);

// F = e^{-4 psi} *_g d omega (components 01, 02, 12) with dF_{012} and the
// wave-equation residual sqrt|g| e^{-4 psi} (box omega - 4 g^{-1}(d psi, d omega)).
struct TwistForm {
    std::vector<Field> F;
    Field dF;
    Field wave;
    double dF_norm = 0.0, wave_norm = 0.0;  // L^2 over time levels two or more steps from the ends
};
TwistForm twist_form(const MetricField& g, const Field& psi, const Field& omega);
// F and dF from a supplied gradient d omega (for non-periodic omega such as x^1);
// wave is left empty.
TwistForm twist_form_gradient(const MetricField& g, const Field& psi, const std::vector<Field>& domega);

// Zero-mean periodic solve of laplacian u = rhs (n = 2, spectral). Rejects
// |mean(rhs)| > 1e-12 max|rhs| with the measured mean.
Field poisson_solve(const SpatialGrid& g, const Field& rhs);
// Spectral Laplacian (the operator poisson_solve inverts).
Field spectral_laplacian(const SpatialGrid& g, const Field& f);

// Static ladder N_eps with beta = 0, tau = 0 on one slice; Ricci components
// (R_00, R_11, R_12, R_22) follow from the elliptic relations.
struct GaugeLadder {
    std::vector<double> eps;
    std::function<GaugeFields(std::size_t)> level;
    GaugeFields limit;
};

struct RicciDiag {
    std::vector<double> lap_l2;     // max_ab ||delta^{ij} d_ij g^{ab}_eps||_{L^2} per level
    SlopeFit lap_fit;               // slope in eps; bounded when > -0.25
    bool lap_bounded = true;
    std::vector<double> grad_l4;    // max_ab ||d_j (g^{ab}_eps - g^{ab})||_{L^4} per level
    SlopeFit grad_fit;
    std::vector<std::vector<double>> probe_dev;  // [component][level] max_j |<R_eps - R, phi_j>| / scale
    std::vector<double> limit_dev;               // [component] at the finest level
    bool flagged() const { return !lap_bounded; }
};
RicciDiag ricci_convergence_diag(const GaugeLadder& ladder, const std::vector<Field>& tests);
std::vector<Field> slice_ricci(const GaugeFields& f);  // (R_00, R_11, R_12, R_22) for static data
std::vector<Field> default_slice_tests(const SpatialGrid& g);

// max over `count` random band-limited fields of
//   ||grad f|| / ((||lap f|| ||f||)^{1/2} + ||f||)
struct InterpolationCheck {
    std::vector<double> ratio;
    double C = 0.0;
};
InterpolationCheck interpolation_check(const SpatialGrid& g, int count, std::uint64_t seed);

}  // namespace blab
