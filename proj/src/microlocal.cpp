#include "blab/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace blab {

Field SymbolDictionary::sample_window(const SpacetimeGrid& g, int c) const {
    return sample(g, [&](const Point& p) { return window(c, p); });
}

SymbolDictionary make_dictionary(const CellLattice& cells, const DirectionBins& bins) {
    cells.validate();
    SymbolDictionary d;
    d.cells = cells;
    d.bins = bins;
    d.window = [cells](int c, const Point& p) { return cells.window(c, p); };
    return d;
}

SymbolDictionary make_dictionary(const SpacetimeGrid& g, std::function<double(const Point&)> chi,
                                 const DirectionBins& bins) {
    SymbolDictionary d;
    d.cells = make_cells(g, 1, 1, 0.0);
    d.bins = bins;
    d.window = [chi = std::move(chi)](int, const Point& p) { return chi(p); };
    return d;
}

namespace {

double box_volume(const SpacetimeGrid& g) { return g.dt() * std::pow(g.dx(), g.n); }

// Unit direction of a box mode, or false when the mode is in the excluded low ball.
bool mode_direction(const FourierBox& box, std::size_t q, double r0, double* xi) {
    int k[3];
    box.mode(q, xi, k);
    const int d = int(box.dims.size());
    double kk = 0.0, nrm = 0.0;
    for (int a = 0; a < d; ++a) {
        kk += double(k[a]) * k[a];
        nrm += xi[a] * xi[a];
    }
    if (kk < r0 * r0 || nrm == 0.0) return false;
    nrm = std::sqrt(nrm);
    for (int a = 0; a < d; ++a) xi[a] /= nrm;
    return true;
}

CField windowed_box(const SpacetimeGrid& g, const Field& b, const Field& v) {
    const std::size_t m = std::size_t(g.Nt) * g.slice_size();
    if (v.size() != g.size()) throw Error("field does not match the slab grid");
    CField c(m);
    if (b.empty())
        for (std::size_t q = 0; q < m; ++q) c[q] = v[q];
    else
        for (std::size_t q = 0; q < m; ++q) c[q] = b[q] * v[q];
    return c;
}

std::vector<double> symbol_on_box(const FourierBox& box, const SymbolFn& m, double r0) {
    std::vector<double> s(box.size(), 0.0);
    double xi[3];
    for (std::size_t q = 0; q < s.size(); ++q)
        if (mode_direction(box, q, r0, xi)) s[q] = m(xi);
    return s;
}

void require_even(const SymbolFn& m, int dim) {
    // deterministic probe directions on the unit sphere
    for (int i = 0; i < 97; ++i) {
        double xi[3], mx[3];
        const double th = 0.7 + 2.39996 * i, ph = std::acos(1.0 - 2.0 * (i + 0.5) / 97.0);
        if (dim == 2) {
            xi[0] = std::cos(th);
            xi[1] = std::sin(th);
        } else {
            xi[0] = std::cos(ph);
            xi[1] = std::sin(ph) * std::cos(th);
            xi[2] = std::sin(ph) * std::sin(th);
        }
        for (int a = 0; a < dim; ++a) mx[a] = -xi[a];
        const double p = m(xi), q = m(mx);
        if (std::abs(p - q) > 1e-12 * std::max(1.0, std::abs(p)))
            throw Error("commutator_pairing: the symbol must be real and even");
    }
}

}  // namespace

CField apply_symbol(const SpacetimeGrid& g, const Field& b, const SymbolFn& m, const Field& v, double r0) {
    const FourierBox box = spacetime_box(g);
    const Fft fft(box.dims);
    CField c = windowed_box(g, b, v);
    fft.forward(c);
    double xi[3];
    for (std::size_t q = 0; q < c.size(); ++q) c[q] *= mode_direction(box, q, r0, xi) ? m(xi) : 0.0;
    fft.inverse(c);
    return c;
}

cplx symbol_pairing(const SpacetimeGrid& g, const Field& b, const SymbolFn& m, const Field& v1, const Field& v2,
                    double r0) {
    const FourierBox box = spacetime_box(g);
    const Fft fft(box.dims);
    CField a = windowed_box(g, b, v1), c = windowed_box(g, {}, v2);
    fft.forward(a);
    fft.forward(c);
    double xi[3];
    cplx s = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q)
        if (mode_direction(box, q, r0, xi)) s += m(xi) * a[q] * std::conj(c[q]);
    return s * box_volume(g) / double(a.size());
}

PairingEngine::PairingEngine(const SpacetimeGrid& g, const std::vector<Field>& v, double r0)
    : g_(g), box_(spacetime_box(g)), fft_(box_.dims) {
    for (const Field& f : v) {
        fv_.push_back(windowed_box(g, {}, f));
        fft_.forward(fv_.back());
    }
    const std::size_t M = box_.size();
    keep_.assign(M, 0);
    dir_.assign(M, {0.0, 0.0, 0.0});
    for (std::size_t q = 0; q < M; ++q) keep_[q] = mode_direction(box_, q, r0, dir_[q].data()) ? 1 : 0;
}

cplx PairingEngine::pair(const Field& wv, const SymbolFn& s, int b) const {
    CField c = windowed_box(g_, {}, wv);
    fft_.forward(c);
    const CField& fb = fv_.at(b);
    cplx acc = 0.0;
    for (std::size_t q = 0; q < c.size(); ++q)
        if (keep_[q]) acc += s(dir_[q].data()) * c[q] * std::conj(fb[q]);
    return acc * box_volume(g_) / double(c.size());
}

DefectMeasureHistogram hmeasure_level(const SpacetimeGrid& g, const SymbolDictionary& dict, const LevelFields& lf) {
    const int dim = g.dim();
    if (int(lf.v.size()) != dim) throw Error("hmeasure: need one field per space-time component");
    DefectMeasureHistogram h(dict.cells, dict.bins, dim);
    const FourierBox box = spacetime_box(g);
    const Fft fft(box.dims);
    const std::size_t M = box.size();
    // bin weights per mode, shared by all cells
    constexpr int W = 4;
    std::vector<std::pair<int, double>> wts(M * W, {-1, 0.0});
    {
        double xi[3];
        std::array<std::pair<int, double>, 4> w;
        for (std::size_t q = 0; q < M; ++q) {
            if (!mode_direction(box, q, dict.r0, xi)) continue;
            const int k = dict.bins.weights(xi, w);
            for (int i = 0; i < k; ++i) wts[q * W + i] = w[i];
        }
    }
    const bool has_f = !lf.f.empty(), has_h = !lf.H.empty();
    const double norm = box_volume(g) / double(M);
    for (int c = 0; c < dict.ncells(); ++c) {
        const Field b = dict.sample_window(g, c);
        std::vector<CField> F(dim);
        for (int a = 0; a < dim; ++a) {
            F[a] = windowed_box(g, b, lf.v[a]);
            fft.forward(F[a]);
        }
        CField Ff, Fs;
        if (has_f) {
            Ff = windowed_box(g, b, lf.f);
            fft.forward(Ff);
        }
        if (has_f || has_h) {
            Fs = windowed_box(g, b, has_h ? lf.H : lf.f);
            if (has_h && has_f)
                for (std::size_t q = 0; q < Fs.size(); ++q) Fs[q] += b[q] * lf.f[q];
            fft.forward(Fs);
        }
        for (std::size_t q = 0; q < M; ++q)
            for (int i = 0; i < W; ++i) {
                const auto [d, w] = wts[q * W + i];
                if (d < 0) break;
                const double s = w * norm;
                for (int a = 0; a < dim; ++a) {
                    const cplx fa = s * F[a][q];
                    for (int bb = 0; bb < dim; ++bb) h.t(c, d, a, bb) += fa * std::conj(F[bb][q]);
                    const std::size_t e = h.at(c, d) * dim + a;
                    if (has_f) h.lambda_tilde[e] += fa * std::conj(Ff[q]);
                    if (has_f || has_h) h.sigma_tilde[e] += fa * std::conj(Fs[q]);
                }
            }
    }
    h.derive_scalars();
    return h;
}

HmeasureResult hmeasure_estimate(const SpacetimeGrid& g, const SymbolDictionary& dict, const std::vector<double>& eps,
                                 const LevelFn& level, const HmeasureOptions& opt) {
    if (eps.size() < 3) throw Error("hmeasure_estimate: ladder shorter than 3 levels");
    HmeasureResult r;
    for (std::size_t l = 0; l < eps.size(); ++l) r.levels.push_back(hmeasure_level(g, dict, level(l)));
    const std::size_t f = eps.size() - 1;
    const DefectMeasureHistogram &pf = r.levels[f], &pm = r.levels[f - 1], &pmm = r.levels[f - 2];
    DefectMeasureHistogram h = pf;
    const double ratio = eps[f - 1] / eps[f];
    double k = opt.rate;
    if (k <= 0.0) {
        const double d1 = pmm.total() - pm.total(), d2 = pm.total() - pf.total();
        k = (d1 != 0.0 && d2 != 0.0) ? std::log(std::abs(d1 / d2)) / std::log(eps[f - 2] / eps[f - 1]) : 1.0;
        if (!std::isfinite(k)) k = 1.0;
        k = std::clamp(k, 0.5, 4.0);
    }
    r.rate = k;
    const double c = 1.0 / (std::pow(ratio, k) - 1.0);
    auto extrap = [&](std::vector<cplx>& out, const std::vector<cplx>& a, const std::vector<cplx>& b) {
        if (!opt.richardson) return;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + c * (a[i] - b[i]);
    };
    extrap(h.tilde, pf.tilde, pm.tilde);
    extrap(h.lambda_tilde, pf.lambda_tilde, pm.lambda_tilde);
    extrap(h.sigma_tilde, pf.sigma_tilde, pm.sigma_tilde);
    h.derive_scalars();
    h.eps = eps;
    double scale = 0.0;
    for (double v : pf.nu) scale = std::max(scale, std::abs(v));
    for (std::size_t e = 0; e < h.entries(); ++e) {
        const auto [lo, hi] = std::minmax({pf.nu[e], pm.nu[e], pmm.nu[e]});
        h.nu_err[e] = hi - lo;
        h.flags[e] = std::abs(pf.nu[e] - pm.nu[e]) > opt.flag_tol * scale ? 1 : 0;
    }
    r.limit = std::move(h);
    return r;
}

BlockReport block_check(const DefectMeasureHistogram& h) {
    BlockReport rep;
    const double total = std::max(h.total(), 1e-300);
    const int d = h.dim;
    for (int c = 0; c < h.cells.count(); ++c)
        for (int k = 0; k < h.nbins(); ++k) {
            if (h.nu[h.at(c, k)] < 1e-6 * total) continue;
            Eigen::MatrixXcd B(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) B(a, b) = h.t(c, k, a, b);
            const double sz = B.norm();
            rep.hermitian = std::max(rep.hermitian, (B - B.adjoint()).norm() / sz);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (B + B.adjoint()));
            const auto& ev = es.eigenvalues();
            rep.negative = std::max(rep.negative, std::max(0.0, -ev(0)) / sz);
            const Eigen::VectorXcd top = es.eigenvectors().col(d - 1);
            const Eigen::MatrixXcd R = 0.5 * (B + B.adjoint()) - ev(d - 1) * top * top.adjoint();
            rep.rank1 = std::max(rep.rank1, R.norm() / sz);
        }
    return rep;
}

double shell_band(const DirectionBins& bins) { return std::max(0.05, 2.0 * bins.width()); }

SupportParityReport support_parity_check(const DefectMeasureHistogram& h, const MetricModel& g) {
    SupportParityReport r;
    r.band = shell_band(h.bins);
    const double total = h.total();
    double off = 0.0;
    for (int c = 0; c < h.cells.count(); ++c) {
        const Mat gi = g.inverse(h.cells.center(c));
        for (int d = 0; d < h.nbins(); ++d) {
            const Vec xi = h.bins.center(d);
            const double p = xi.dot(gi * xi);
            if (std::abs(p) > r.band) off += std::abs(h.nu[h.at(c, d)]);
        }
    }
    double lam = 0.0;
    for (double v : h.lambda) lam += std::abs(v);
    r.off_shell = total > 0 ? off / total : 0.0;
    r.odd = total > 0 ? h.odd_mass() / total : 0.0;
    r.lambda_even = lam > 0 ? h.lambda_even_mass() / lam : 0.0;
    return r;
}

double zeta(double x) { return smooth_step(2.0 - x); }

FrequencyPartition partition_build(const FourierBox& box, double d1, double d2, double omega) {
    if (!(d1 > 0.5)) throw Error("partition: time-dominated regime requires delta1 > 1/2");
    if (!(d1 < 1.0)) throw Error("partition: low-frequency regime requires delta1 < 1");
    if (!(d2 < 1.0)) throw Error("partition: time-dominated regime requires delta2 < 1");
    if (!(d1 * d2 > 0.5)) throw Error("partition: spatially dominated regime requires delta1 delta2 > 1/2");
    if (!(omega > 0.0)) throw Error("partition: omega must be positive");
    FrequencyPartition p;
    p.delta1 = d1;
    p.delta2 = d2;
    p.omega = omega;
    p.box = box;
    const std::size_t M = box.size();
    p.low.assign(M, 0.0);
    p.spa.assign(M, 0.0);
    p.time.assign(M, 0.0);
    const int d = int(box.dims.size());
    const double rlow = std::pow(omega, -d1);
    double xi[3];
    for (std::size_t q = 0; q < M; ++q) {
        box.mode(q, xi, nullptr);
        double spa2 = 0.0;
        for (int a = 1; a < d; ++a) spa2 += xi[a] * xi[a];
        const double tot = std::sqrt(spa2 + xi[0] * xi[0]), spa = std::sqrt(spa2);
        const double lo = zeta(std::pow(omega, d1) * tot);
        double sp = 0.0;
        if (lo < 1.0) sp = (1.0 - lo) * (1.0 - zeta(spa / std::pow(tot, d2)));
        p.low[q] = lo;
        p.spa[q] = sp;
        p.time[q] = 1.0 - lo - sp;
        // support inclusions
        const double tiny = 1e-12;
        bool ok = true;
        if (lo > tiny && tot > 2.0 * rlow * (1 + 1e-12)) ok = false;
        if (sp > tiny && !(spa >= std::pow(tot, d2) * (1 - 1e-12) && std::pow(tot, d2) >= std::pow(omega, -d1 * d2) * (1 - 1e-12)))
            ok = false;
        if (p.time[q] > tiny &&
            !(xi[0] * xi[0] >= tot * tot - 4.0 * std::pow(tot, 2 * d2) - 1e-9 * tot * tot && tot >= rlow * (1 - 1e-12)))
            ok = false;
        if (!ok) ++p.support_violations;
    }
    return p;
}

Field partition_project(const SpacetimeGrid& g, const FrequencyPartition& p, Regime r, const Field& h) {
    const Fft fft(p.box.dims);
    CField c = to_box(g, h);
    if (c.size() != p.box.size()) throw Error("partition_project: grid does not match the partition box");
    fft.forward(c);
    const auto& th = p.theta(r);
    for (std::size_t q = 0; q < c.size(); ++q) c[q] *= th[q];
    fft.inverse(c);
    return from_box_real(g, c);
}

RegimePairing commutator_pairing(const SpacetimeGrid& g, const std::vector<Field>& dw, const std::vector<Field>& dew,
                                 const std::vector<Field>& h, const Field& b, const SymbolFn& m,
                                 const FrequencyPartition& p) {
    const int d = g.dim();
    if (int(dw.size()) != d || int(dew.size()) != d || int(h.size()) != sym_count(d))
        throw Error("commutator_pairing: component counts do not match the grid");
    require_even(m, d);
    const FourierBox box = spacetime_box(g);
    if (box.dims != p.box.dims) throw Error("commutator_pairing: partition built on a different lattice");
    const Fft fft(box.dims);
    const std::size_t M = box.size();
    const std::vector<double> sym = symbol_on_box(box, m, 4.0);
    auto A = [&](CField c) {
        for (std::size_t q = 0; q < M; ++q) c[q] *= b[q];
        fft.forward(c);
        for (std::size_t q = 0; q < M; ++q) c[q] *= sym[q];
        fft.inverse(c);
        return c;
    };
    // A applied to d_b e0 w is independent of h
    std::vector<CField> Ade(d);
    for (int be = 0; be < d; ++be) Ade[be] = A(to_box(g, dew[be]));
    const double vol = box_volume(g);
    auto pairing = [&](const std::vector<Field>& hh) {
        double s = 0.0;
        for (int al = 0; al < d; ++al) {
            CField F(M, 0.0);
            for (int be = 0; be < d; ++be) {
                const Field& hab = hh[sym_index(d, al, be)];
                for (std::size_t q = 0; q < M; ++q) F[q] += hab[q] * dew[be][q];
            }
            const CField AF = A(std::move(F));
            for (std::size_t q = 0; q < M; ++q) {
                double comm = AF[q].real();
                for (int be = 0; be < d; ++be) comm -= hh[sym_index(d, al, be)][q] * Ade[be][q].real();
                s += dw[al][q] * comm;
            }
        }
        return s * vol;
    };
    RegimePairing r;
    r.total = pairing(h);
    for (Regime reg : {Regime::low, Regime::spa, Regime::time}) {
        std::vector<Field> hp;
        for (const Field& f : h) hp.push_back(partition_project(g, p, reg, f));
        const double v = pairing(hp);
        (reg == Regime::low ? r.low : reg == Regime::spa ? r.spa : r.time) = v;
    }
    return r;
}

RegimeRates regime_rates(const std::vector<RegimePairing>& pr, const std::vector<double>& omega, double d1, double d2,
                         double slack) {
    if (pr.size() < 4 || omega.size() != pr.size()) throw Error("regime_rates: need at least 4 ladder levels");
    RegimeRates r;
    const std::array<double, 3> theory{1.0 - d1, 2.0 * d1 * d2 - 1.0, d1 - 0.5};
    std::vector<double> tot;
    for (const auto& p : pr) tot.push_back(p.total);
    r.total = fit_loglog(omega, tot);
    for (int k = 0; k < 3; ++k) {
        std::vector<double> y;
        for (const auto& p : pr) y.push_back(k == 0 ? p.low : k == 1 ? p.spa : p.time);
        r.threshold[k] = theory[k] - slack;
        r.fit[k] = fit_loglog(omega, y);
        bool mono = true;
        for (std::size_t i = 1; i < y.size(); ++i)
            if ((omega[i] < omega[i - 1]) != (std::abs(y[i]) < std::abs(y[i - 1]))) mono = false;
        r.monotone[k] = mono;
        double mx = 0.0;
        for (double v : y) mx = std::max(mx, std::abs(v));
        r.pass[k] = mx == 0.0 || !r.fit[k].defined || r.fit[k].slope >= r.threshold[k];
    }
    return r;
}

void write_rates(const std::string& path, const RegimeRates& r, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << header << std::setprecision(10);
    static const char* names[3] = {"low", "spa", "time"};
    for (int k = 0; k < 3; ++k) {
        os << "[" << names[k] << "]\n";
        os << "slope = " << r.fit[k].slope << "\n";
        os << "halfwidth = " << r.fit[k].halfwidth << "\n";
        os << "defined = " << (r.fit[k].defined ? 1 : 0) << "\n";
        os << "threshold = " << r.threshold[k] << "\n";
        os << "monotone = " << (r.monotone[k] ? 1 : 0) << "\n";
        os << "pass = " << (r.pass[k] ? 1 : 0) << "\n";
    }
    os << "[total]\nslope = " << r.total.slope << "\n";
    if (!os) throw Error("write failed: " + path);
}

}  // namespace blab
