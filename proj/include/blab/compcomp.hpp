#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "blab/geometry.hpp"

namespace blab {

// Eight smooth bumps phi_j(t) psi_j(x) at staggered centres and widths, compactly
// supported inside the slab and periodic in space.
std::vector<Field> default_tests(const SpacetimeGrid& g);

// u_eps on a ladder with its gradient d_a u_eps (a = 0..n); u may be empty.
struct FieldLadder {
    std::vector<double> eps;
    std::function<Field(std::size_t)> u;
    std::function<std::vector<Field>(std::size_t)> du;
};

// Analytic ladders on the slab (phases in x^1):
//   eps sin((x - t)/eps)                     null plane wave
//   eps sin((x - t)/eps) + eps sin((x + t)/eps)   crossing null waves
//   eps sin(x/eps)                           spatial phase (box u not compact)
FieldLadder null_plane_ladder(const SpacetimeGrid& g, std::vector<double> eps);
FieldLadder crossing_null_ladder(const SpacetimeGrid& g, std::vector<double> eps);
FieldLadder spatial_phase_ladder(const SpacetimeGrid& g, std::vector<double> eps);
FieldLadder zero_ladder(const SpacetimeGrid& g, std::vector<double> eps);
// u_eps + c_a x^a (weak limit c_a x^a).
FieldLadder shifted(const SpacetimeGrid& g, FieldLadder base, std::vector<double> c);

// Pairings <v_eps, phi_j> per level. The limit is the finest level: pairings of
// oscillations with smooth tests converge faster than any power and not
// monotonically, so no extrapolation is applied. err = spread of the last three.
struct WeakLimitProbe {
    std::vector<double> eps;
    std::vector<std::vector<double>> pairings;  // [level][j]
    std::vector<double> scale;                  // [j]: int |phi_j| |v| at the finest level
    std::vector<double> limit, err;
};

WeakLimitProbe weak_limit(const SpacetimeGrid& g, const std::vector<double>& eps,
                          const std::function<Field(std::size_t)>& v, const std::vector<Field>& tests);

// Comparison of a probe with target values. Deviations are |p - target| / scale_j,
// maximised over j (per level and at the limit).
struct LimitVerdict {
    WeakLimitProbe probe;
    std::vector<double> target;
    std::vector<double> deviation;  // per level
    double max_deviation = 0.0;     // at the limit
    double tol = 0.05;
    bool pass = false;
    std::vector<double> box_l3;     // ||box u^I||_{L^3} per level, when u is available
};

// w-lim g^{-1}(du1_eps, du2_eps) against g^{-1}(du1, du2) from the limit gradients
// (empty: zero limit).
LimitVerdict nullform_limit(const MetricField& g, const FieldLadder& u1, const FieldLadder& u2,
                            const std::vector<Field>& du1, const std::vector<Field>& du2, const std::vector<Field>& tests,
                            double tol = 0.05);

// w-lim X u1_eps g^{-1}(du2_eps, du3_eps) against `target` (empty: zero).
LimitVerdict trilinear_limit(const MetricField& g, const std::vector<Field>& X, const FieldLadder& u1,
                             const FieldLadder& u2, const FieldLadder& u3, const std::vector<Field>& tests,
                             const std::vector<double>& target = {}, double tol = 0.05);

void write_probe_csv(const std::string& path, const LimitVerdict& v, const std::string& header);

}  // namespace blab
