#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blab/geometry.hpp"
#include "blab/measure.hpp"

namespace blab {

// Initial phase on the t = 0 slice: value and spatial gradient at a point
// (x^1[, x^2]), not necessarily periodic (plane phases k.x are the usual case).
struct InitialPhase {
    std::function<double(const double*)> value;
    std::function<void(const double*, double*)> gradient;
};
InitialPhase plane_phase(const std::vector<double>& k);

enum class Branch { future, past };

struct EikonalOptions {
    Branch branch = Branch::future;
    int substeps = 1;              // RK4 steps per slab time step
    double caustic_ratio = 1e-3;   // ray-Jacobian threshold relative to the initial value
};

// Phase on the whole slab, built by tracing null bicharacteristics from every
// t = 0 grid point and inverting the ray map on each time level.
struct PhaseField {
    SpacetimeGrid grid;
    Field phi;
    std::vector<Field> dphi;      // d_alpha phi, alpha = 0..n
    std::vector<Field> origin;    // ray foot point y^i (unwrapped) of each grid point
    Field transport;              // sqrt((sqrtg xdot0)(0, y) / ((sqrtg xdot0)(t, x) J)): a = a0(y) * transport
    double max_residual = 0.0;    // max |g^{ab} dphi_a dphi_b| / |dphi|^2 on the rays
    bool caustic = false;
    double caustic_time = 0.0;    // first time the Jacobian fell below threshold
    int valid_levels = 0;         // time levels filled before any caustic
};

PhaseField eikonal_solve(const MetricModel& g, const SpacetimeGrid& grid, const InitialPhase& phi0,
                         const EikonalOptions& opt = {});

// Null covector over the spatial part xi_i at a point: xi_0 from the light cone.
double null_xi0(const Mat& ginv, const double* xi_spatial, Branch b);

// Geometric-optics amplitude transported along the rays of `phase`.
Field transport_solve(const PhaseField& phase, const std::function<double(const double*)>& a0);

struct WkbNorms {
    double u_over_eps = 0.0;  // ||u||_inf / eps
    double du = 0.0;          // ||du||_inf
    double eps_d2u = 0.0;     // eps ||d^2 u||_inf (interior)
};

// u_eps = eps a cos(phi / eps) on a ladder. Fields are generated per level on
// demand; `norms` is filled by sample_family.
struct WkbFamily {
    const PhaseField* phase = nullptr;
    Field a;
    std::vector<double> eps;
    std::vector<WkbNorms> norms;
    std::vector<Field> da;  // d_alpha a

    const SpacetimeGrid& grid() const { return phase->grid; }
    Field field(std::size_t level) const;
    // d_alpha u_eps from (a, phi, dphi, da) without differencing the oscillation.
    std::vector<Field> gradient(std::size_t level) const;
};

// Rejects grids with dx > eps_min / P (reporting the power-of-two Nx needed).
WkbFamily sample_family(const PhaseField& phase, const Field& a, const std::vector<double>& eps,
                        double points_per_eps = 16.0);
int required_nx(double L, double eps_min, double points_per_eps);

// Analytic defect measure of (d u_eps): nu-tilde_{ab} = dphi_a dphi_b a^2 / 4
// times (m_d(dphi^) + m_d(-dphi^)), paired with b_c^2 and integrated over the slab.
DefectMeasureHistogram reference_measure(const WkbFamily& fam, const CellLattice& cells, const DirectionBins& bins);

void write_manifest(const std::string& path, const WkbFamily& fam, const std::string& phase_dump,
                    const std::string& amplitude_dump, const std::string& header);

}  // namespace blab
