#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "blab/geometry.hpp"

namespace blab {

// Time step from the largest coordinate light speed, dt = C dx / c_max.
double cfl_dt(const MetricField& g, double dx, double C = 0.5);
double cfl_dt(const MetricModel& m, const SpacetimeGrid& grid, double C = 0.5);

// Slice coefficients of an analytic metric, cached for the few most recent times.
class WaveContext {
public:
    WaveContext(MetricModel m, SpatialGrid s);
    const SliceCoefficients& at(double t) const;
    const MetricModel& model() const { return model_; }
    const SpatialGrid& grid() const { return grid_; }

private:
    MetricModel model_;
    SpatialGrid grid_;
    mutable std::array<SliceCoefficients, 4> cache_;
    mutable std::array<bool, 4> used_{};
    mutable int next_ = 0;
};

// One time slice of a scalar wave. v = e0 u; p = sqrt|g| g^{00} e0 u is the
// evolved momentum. The previous level is kept once the leapfrog is running.
struct WaveState {
    double t = 0.0;
    Field u, v, p;
    Field u_prev, p_prev;
    double dt_prev = 0.0;
    long steps = 0;
};

WaveState make_state(const WaveContext& ctx, double t, Field u, Field v);

using SourceFn = std::function<Field(double t)>;  // empty: f = 0

// Three-level leapfrog on (u, p), first step by Heun:
//   u_t = p / (sqrt|g| g^{00}) + beta^i d_i u
//   p_t = sqrt|g| f + d_i(beta^i p - sqrt|g| gtilde^{ij} d_j u)
void step_linear(const WaveContext& ctx, WaveState& st, const SourceFn& f, double dt);

// Riemannian target: metric g_IJ(y), Christoffels Gamma^I_JK(y) flattened as
// [(I * N + J) * N + K], and a chart box outside which evolution halts.
struct Target {
    int N = 1;
    std::string name = "flat";
    std::function<void(const double*, double*)> metric;
    std::function<void(const double*, double*)> christoffel;
    std::vector<double> lo, hi;
};
Target flat_target(int N);
// 2 dpsi^2 + 1/2 e^{-4 psi} domega^2 on (psi, omega); |psi| <= psi_bound.
Target poincare_target(double psi_bound = 20.0);

struct WaveMapState {
    std::vector<WaveState> comp;
};

using MultiSourceFn = std::function<std::vector<Field>(double t)>;  // empty: f = 0

// Semilinear step of  box u^I + Gamma^I_JK(u) g^{-1}(du^J, du^K) = f^I  with the
// nonlinearity taken from the current slice.
void step_wavemap(const WaveContext& ctx, const Target& target, WaveMapState& st, const MultiSourceFn& f,
                  double dt);

// Slab histories of an evolution sampled on `out` (steps subdivide out.dt()).
struct Evolution {
    SpacetimeGrid grid;
    std::vector<Field> u, v;  // per component, slab fields
    int substeps = 1;
};

Evolution evolve_linear(const MetricModel& m, const SpacetimeGrid& out, const Field& u0, const Field& v0,
                        const SourceFn& f = {}, double C = 0.5);
Evolution evolve_wavemap(const MetricModel& m, const Target& target, const SpacetimeGrid& out,
                         const std::vector<Field>& u0, const std::vector<Field>& v0, const MultiSourceFn& f = {},
                         double C = 0.5);

// Space-time gradient d_alpha u of a slab history: spatial central differences,
// time derivative rebuilt from e0 u as d_t u = v + beta^i d_i u.
std::vector<Field> slab_gradient(const MetricField& g, const Field& u, const Field& v);

// Energy of a slice for a time-independent, shift-free metric:
// 1/2 int sqrt|g| (-g^{00} (e0 u)^2 + gtilde^{ij} d_i u d_j u) dx.
double slice_energy(const WaveContext& ctx, const WaveState& st);

struct EnergyDensity {
    std::vector<Field> T;  // lexicographic symmetric components T_ab
    std::vector<Field> J;  // J^X_a
};

// T_ab[u1, u2] and J^X_a[u1, u2] with X given by its components X^a on the slab.
EnergyDensity stress_current(const MetricField& g, const Field& u1, const Field& u2, const std::vector<Field>& X);

// | int (div J^X - 1/2 (X u1 box u2 + X u2 box u1) - T_ab grad^a X^b) phi dVol_g |.
double energy_residual(const MetricField& g, const Field& u1, const Field& u2, const std::vector<Field>& X,
                       const Field& phi);

// Lagrangian density L_ab Y^a Y^b = g_IJ(u) (Y u^I)(Y u^J), from space-time gradients.
Field lagrangian_density(const Target& target, const std::vector<Field>& u,
                         const std::vector<std::vector<Field>>& du, const std::vector<Field>& Y);

// Richardson-style limit of a ladder with ratio 1/2 and linear rate:
// limit = 2 p_f - p_{f-1}; error bar = spread of the last three levels.
struct LadderLimit {
    std::vector<double> levels;
    double limit = 0.0;
    double error_bar = 0.0;
};
LadderLimit ladder_limit(const std::vector<double>& values);

// One ladder level of a wave-map family: metric, component slab fields u^I and
// their space-time gradients.
struct WaveMapLevel {
    const MetricField* g = nullptr;
    std::vector<Field> u;
    std::vector<std::vector<Field>> du;
};

// int L[u_eps](Y, Y) dVol_{g_eps} - int L[u](Y, Y) dVol_g per level, and the limit.
LadderLimit lagrangian_defect(const Target& target, const std::vector<WaveMapLevel>& levels,
                              const WaveMapLevel& limit, const std::vector<Field>& Y);

}  // namespace blab
