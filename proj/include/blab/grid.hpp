#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blab {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};

using Field = std::vector<double>;
using Point = std::array<double, 3>;  // (t, x1, x2); x2 unused for n = 1

// Small dense matrices: at most 4x4 (the U(1) assembly is the largest user).
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;

// Periodic spatial torus [0, L)^n with Nx points per axis, row-major (x1 slower).
struct SpatialGrid {
    int n = 1;
    double L = kTwoPi;
    int Nx = 64;

    double dx() const { return L / Nx; }
    std::size_t size() const { return n == 1 ? std::size_t(Nx) : std::size_t(Nx) * Nx; }
    double x(int i) const { return i * dx(); }
    std::size_t idx(int i1, int i2 = 0) const {
        i1 = wrap(i1);
        if (n == 1) return std::size_t(i1);
        return std::size_t(i1) * Nx + wrap(i2);
    }
    int wrap(int i) const { return ((i % Nx) + Nx) % Nx; }
    void validate() const;
    bool operator==(const SpatialGrid& o) const { return n == o.n && L == o.L && Nx == o.Nx; }
};

// Time slab [0, T] sampled at Nt + 1 points (both ends included) times a spatial torus.
struct SpacetimeGrid {
    int n = 1;
    double T = 1.0;
    double L = kTwoPi;
    int Nt = 64;
    int Nx = 64;

    double dt() const { return T / Nt; }
    double dx() const { return L / Nx; }
    int nt() const { return Nt + 1; }
    int dim() const { return n + 1; }
    std::size_t slice_size() const { return spatial().size(); }
    std::size_t size() const { return std::size_t(nt()) * slice_size(); }
    SpatialGrid spatial() const { return SpatialGrid{n, L, Nx}; }
    std::size_t idx(int k, int i1, int i2 = 0) const { return std::size_t(k) * slice_size() + spatial().idx(i1, i2); }
    Point point(std::size_t flat) const;
    void validate() const;
    bool operator==(const SpacetimeGrid& o) const {
        return n == o.n && T == o.T && L == o.L && Nt == o.Nt && Nx == o.Nx;
    }
};

void require_same(const SpacetimeGrid& a, const SpacetimeGrid& b, const char* what);

// Evaluate a callable on every grid point.
template <class F>
Field sample(const SpacetimeGrid& g, F&& f) {
    Field out(g.size());
    for (std::size_t q = 0; q < out.size(); ++q) out[q] = f(g.point(q));
    return out;
}

// Second-order finite differences. Space is periodic; time uses one-sided
// second-order stencils at the two slab ends.
Field d_time(const SpacetimeGrid& g, const Field& f);
Field d_space(const SpacetimeGrid& g, const Field& f, int axis);  // axis in 1..n
Field d_coord(const SpacetimeGrid& g, const Field& f, int alpha);  // alpha in 0..n
Field d2_time(const SpacetimeGrid& g, const Field& f);
Field d2_space(const SpacetimeGrid& g, const Field& f, int axis);
Field d2_coord(const SpacetimeGrid& g, const Field& f, int a, int b);

// Slice-level periodic operators.
Field d_slice(const SpatialGrid& g, const Field& f, int axis);
Field d2_slice(const SpatialGrid& g, const Field& f, int a, int b);
Field laplacian_slice(const SpatialGrid& g, const Field& f);

// Slab integrals: trapezoid in time, periodic sum in space.
double integrate(const SpacetimeGrid& g, const Field& f);
double integrate(const SpatialGrid& g, const Field& f);
double sup_norm(const Field& f);
double lp_norm(const SpacetimeGrid& g, const Field& f, double p);

Field extract_slice(const SpacetimeGrid& g, const Field& f, int k);

// Smooth step S(y): 0 for y <= 0, 1 for y >= 1, S(y) + S(1-y) = 1.
double smooth_step(double y);
// C-infinity bump supported on (c - r, c + r) with peak value 1 at c.
double bump(double x, double c, double r);

// Least-squares slope of log|y| versus log x.
struct SlopeFit {
    double slope = 0.0;
    double halfwidth = 0.0;  // 95% half-width (t-quantile approx.)
    double intercept = 0.0;
    bool defined = false;
};
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace blab
