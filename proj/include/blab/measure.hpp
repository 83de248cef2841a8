#pragma once

#include <array>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "blab/grid.hpp"

namespace blab {

using cplx = std::complex<double>;

// Space-time cells c with windows b_c. p_c = b_c^2 is a smooth tent partition:
// periodic in space, and in time vanishing outside (t_lo, t_hi) so that the
// windowed fields are periodic on the Fourier box. sum_c b_c^2 = 1 on
// [t_lo + w_t, t_hi - w_t] where w_t is the time spacing of cell centres.
struct CellLattice {
    int n = 1;
    double T = 1.0, L = kTwoPi;
    int nct = 1, ncx = 1;
    double t_lo = 0.0, t_hi = 1.0;

    int count() const { return nct * (n == 1 ? ncx : ncx * ncx); }
    double time_spacing() const { return (t_hi - t_lo) / (nct + 1); }
    double space_spacing() const { return L / ncx; }
    Point center(int c) const;
    double window(int c, const Point& p) const;  // b_c
    // Measurement region in time where the partition sums to one.
    double t_begin() const { return t_lo + time_spacing(); }
    double t_end() const { return t_hi - time_spacing(); }
    void validate() const;
};

// Standard lattice: cells over the slab with windows vanishing within `margin`
// of both time ends.
CellLattice make_cells(const SpacetimeGrid& g, int nct, int ncx, double margin);

// Smooth partition of the Euclidean unit sphere in (xi_0, ..., xi_n).
// n = 1: nb equal-angle bins on S^1, angle atan2(xi_1, xi_0), centres 2 pi d / nb.
// n = 2: nlat x nlon latitude-longitude bins, polar axis xi_0, centres at half steps.
struct DirectionBins {
    int n = 1;
    int nb = 32;
    int nlat = 16, nlon = 32;

    int count() const { return n == 1 ? nb : nlat * nlon; }
    Vec center(int d) const;
    int antipode(int d) const;
    double width() const;  // angular spacing of centres
    // Nonzero partition weights m_d(xi / |xi|); returns how many were written.
    int weights(const double* xi, std::array<std::pair<int, double>, 4>& out) const;
    double weight(int d, const double* xi) const;
};

DirectionBins default_bins(int n);

// Histogram of a (1+n)x(1+n) matrix-valued measure on cells x direction bins,
// with the scalar measures nu, lambda, sigma and their vector cross blocks.
struct DefectMeasureHistogram {
    CellLattice cells;
    DirectionBins bins;
    int dim = 2;

    std::vector<cplx> tilde;         // nu-tilde, [(c * nbins + d) * dim + a] * dim + b
    std::vector<cplx> lambda_tilde;  // [(c * nbins + d) * dim + a]
    std::vector<cplx> sigma_tilde;
    Field nu, lambda, sigma;  // [c * nbins + d]
    Field nu_err;             // extrapolation error bar per entry (0 when exact)
    std::vector<int> flags;   // nonzero: extrapolation disagreement
    std::vector<double> eps;  // ladder used (empty for analytic measures)

    DefectMeasureHistogram() = default;
    DefectMeasureHistogram(const CellLattice& c, const DirectionBins& b, int dim);

    int nbins() const { return bins.count(); }
    std::size_t entries() const { return std::size_t(cells.count()) * nbins(); }
    std::size_t at(int c, int d) const { return std::size_t(c) * nbins() + d; }
    cplx& t(int c, int d, int a, int b) { return tilde[(at(c, d) * dim + a) * dim + b]; }
    cplx t(int c, int d, int a, int b) const { return tilde[(at(c, d) * dim + a) * dim + b]; }

    // nu = trace of each block; lambda, sigma = xi-hat . cross blocks (real parts).
    void derive_scalars();
    double total() const;
    // Replace nu by (nu + nu o antipode) / 2 (blocks too); lambda by its odd part.
    DefectMeasureHistogram symmetrized() const;
    // Mass of the odd part of nu: sum |nu(d) - nu(-d)| / 2.
    double odd_mass() const;
    double lambda_even_mass() const;
};

// Relative L1 distance sum |a - b| / sum |b| over the scalar nu.
double relative_l1(const DefectMeasureHistogram& a, const DefectMeasureHistogram& b);

void write_histogram_csv(const std::string& path, const DefectMeasureHistogram& h, const std::string& header);

}  // namespace blab
