#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "blab/fft.hpp"
#include "blab/geometry.hpp"
#include "blab/measure.hpp"

namespace blab {

// Zeroth-order direction symbol m(xi / |xi|), evaluated on the Euclidean unit
// sphere of angular space-time frequencies (xi_0, ..., xi_n).
using SymbolFn = std::function<double(const double* xi_unit)>;

// Cell windows b_c and direction bins m_d. Windows default to the lattice tents;
// any other family (one cell with a custom chi, say) can be supplied.
struct SymbolDictionary {
    CellLattice cells;
    DirectionBins bins;
    std::function<double(int c, const Point& p)> window;
    double r0 = 4.0;  // modes with |k| < r0 (lattice units) are dropped

    int ncells() const { return cells.count(); }
    Field sample_window(const SpacetimeGrid& g, int c) const;
};

SymbolDictionary make_dictionary(const CellLattice& cells, const DirectionBins& bins);
// One cell whose window is chi (chi^2 is the spatial weight of the single cell).
SymbolDictionary make_dictionary(const SpacetimeGrid& g, std::function<double(const Point&)> chi,
                                 const DirectionBins& bins);

// A v = F^{-1}(m F(b v)) on the space-time Fourier box (first Nt samples), with
// low modes removed. Real v and real even m give a real result.
CField apply_symbol(const SpacetimeGrid& g, const Field& b, const SymbolFn& m, const Field& v, double r0 = 4.0);

// <A v1, v2> = int (A v1) conj(v2) over the box, A = F^{-1} m F (b .).
cplx symbol_pairing(const SpacetimeGrid& g, const Field& b, const SymbolFn& m, const Field& v1, const Field& v2,
                    double r0 = 4.0);

// Repeated pairings int F^{-1}(s F(wv)) conj(v_b) against a fixed set of fields;
// the transforms of v_b are computed once. wv is a product window * field.
class PairingEngine {
public:
    PairingEngine(const SpacetimeGrid& g, const std::vector<Field>& v, double r0 = 4.0);
    cplx pair(const Field& wv, const SymbolFn& s, int b) const;
    const SpacetimeGrid& grid() const { return g_; }

private:
    SpacetimeGrid g_;
    FourierBox box_;
    Fft fft_;
    std::vector<CField> fv_;
    std::vector<char> keep_;
    std::vector<std::array<double, 3>> dir_;
};

// One ladder level: v_a = d_a(u_eps - u), optional sources f = f_eps - f and
// H = (box_{g_eps} - box_g) u_eps (empty fields are treated as zero).
struct LevelFields {
    std::vector<Field> v;
    Field f, H;
};
using LevelFn = std::function<LevelFields(std::size_t level)>;

// Limit p_f + (p_f - p_{f-1}) / (r^k - 1), r the ladder ratio of the two finest
// levels. k = 0 estimates the rate from the total mass of the last three levels.
struct HmeasureOptions {
    bool richardson = true;  // otherwise the finest level is the limit
    double rate = 0.0;
    double flag_tol = 0.1;   // |p_f - p_{f-1}| above flag_tol * max entry flags the bin
};

struct HmeasureResult {
    DefectMeasureHistogram limit;
    std::vector<DefectMeasureHistogram> levels;
    double rate = 0.0;  // rate used for the extrapolation
};

DefectMeasureHistogram hmeasure_level(const SpacetimeGrid& g, const SymbolDictionary& dict, const LevelFields& lf);
HmeasureResult hmeasure_estimate(const SpacetimeGrid& g, const SymbolDictionary& dict, const std::vector<double>& eps,
                                 const LevelFn& level, const HmeasureOptions& opt = {});

// Block structure of a histogram: Hermitian defect, most negative eigenvalue and
// rank-one residual, each relative to the block size, maximised over blocks
// carrying more than 1e-6 of the total mass.
struct BlockReport {
    double hermitian = 0.0;
    double negative = 0.0;
    double rank1 = 0.0;
};
BlockReport block_check(const DefectMeasureHistogram& h);

struct SupportParityReport {
    double band = 0.0;          // shell half-width used
    double off_shell = 0.0;     // fraction of nu-mass outside the band
    double odd = 0.0;           // odd-part mass of nu / total
    double lambda_even = 0.0;   // even-part mass of lambda / lambda total (0 when lambda = 0)
};
// Shell test |g^{ab}(x_c) xi_a xi_b| <= band at bin centres xi on the unit sphere.
SupportParityReport support_parity_check(const DefectMeasureHistogram& h, const MetricModel& g);
double shell_band(const DirectionBins& bins);

// zeta = 1 on [0, 1], 0 on [2, inf), smooth in between.
double zeta(double x);

enum class Regime { low, spa, time };

struct FrequencyPartition {
    double delta1 = 5.0 / 6.0, delta2 = 0.8, omega = 1.0;
    FourierBox box;
    std::vector<double> low, spa, time;  // on the box lattice
    long support_violations = 0;         // lattice points failing a support inclusion

    const std::vector<double>& theta(Regime r) const { return r == Regime::low ? low : r == Regime::spa ? spa : time; }
};

// Rejects exponents outside 1/2 < delta1 < 1, 1/(2 delta1) < delta2 < 1.
FrequencyPartition partition_build(const FourierBox& box, double delta1, double delta2, double omega);
Field partition_project(const SpacetimeGrid& g, const FrequencyPartition& p, Regime r, const Field& h);

struct RegimePairing {
    double total = 0.0, low = 0.0, spa = 0.0, time = 0.0;
};

// int d_a w [A, h^{ab}] d_b e0 w over the box, overall and with h replaced by
// its three frequency projections. dw = d_a w, dew = d_b e0 w, h in
// lexicographic symmetric order. m must be real and even.
RegimePairing commutator_pairing(const SpacetimeGrid& g, const std::vector<Field>& dw, const std::vector<Field>& dew,
                                 const std::vector<Field>& h, const Field& b, const SymbolFn& m,
                                 const FrequencyPartition& p);

struct RegimeRates {
    std::array<SlopeFit, 3> fit;        // low, spa, time: slope of log|pairing| vs log omega
    std::array<double, 3> threshold{};  // (1 - d1, 2 d1 d2 - 1, d1 - 1/2) - slack
    std::array<bool, 3> pass{};
    std::array<bool, 3> monotone{};
    SlopeFit total;
    bool all_pass() const { return pass[0] && pass[1] && pass[2]; }
};

RegimeRates regime_rates(const std::vector<RegimePairing>& pairings, const std::vector<double>& omega, double delta1,
                         double delta2, double slack = 0.15);

void write_rates(const std::string& path, const RegimeRates& r, const std::string& header);

}  // namespace blab
