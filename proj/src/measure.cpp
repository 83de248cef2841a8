#include "blab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace blab {

namespace {

// Tent partition weight of a centre at distance s with spacing w.
double tent(double s, double w) {
    const double y = 1.0 - std::abs(s) / w;
    return y <= 0.0 ? 0.0 : smooth_step(y);
}

double wrap_signed(double s, double period) {
    s = std::fmod(s, period);
    if (s >= 0.5 * period) s -= period;
    if (s < -0.5 * period) s += period;
    return s;
}

void space_parts(const CellLattice& cl, int c, int& it, int& i1, int& i2) {
    const int per = cl.n == 1 ? cl.ncx : cl.ncx * cl.ncx;
    it = c / per;
    const int r = c % per;
    i1 = cl.n == 1 ? r : r / cl.ncx;
    i2 = cl.n == 1 ? 0 : r % cl.ncx;
}

double space_weight(const CellLattice& cl, int i, double x) {
    if (cl.ncx == 1) return 1.0;
    const double w = cl.space_spacing();
    return tent(wrap_signed(x - i * w, cl.L), w);
}

}  // namespace

void CellLattice::validate() const {
    if (n != 1 && n != 2) throw ConfigError("cells: n must be 1 or 2");
    if (nct < 1 || ncx < 1) throw ConfigError("cells: need at least one cell per axis");
    if (!(t_lo >= 0.0 && t_hi <= T && t_hi > t_lo)) throw ConfigError("cells: time window outside the slab");
}

Point CellLattice::center(int c) const {
    int it, i1, i2;
    space_parts(*this, c, it, i1, i2);
    return {t_lo + (it + 1) * time_spacing(), i1 * space_spacing(), n == 1 ? 0.0 : i2 * space_spacing()};
}

double CellLattice::window(int c, const Point& p) const {
    int it, i1, i2;
    space_parts(*this, c, it, i1, i2);
    const double wt = time_spacing();
    double s = p[0] - (t_lo + (it + 1) * wt);
    double w = tent(s, wt);
    if (w == 0.0) return 0.0;
    w *= space_weight(*this, i1, p[1]);
    if (n == 2) w *= space_weight(*this, i2, p[2]);
    return std::sqrt(w);
}

CellLattice make_cells(const SpacetimeGrid& g, int nct, int ncx, double margin) {
    CellLattice c;
    c.n = g.n;
    c.T = g.T;
    c.L = g.L;
    c.nct = nct;
    c.ncx = ncx;
    c.t_lo = margin;
    c.t_hi = g.T - margin;
    c.validate();
    return c;
}

Vec DirectionBins::center(int d) const {
    Vec v(n + 1);
    if (n == 1) {
        const double th = kTwoPi * d / nb;
        v << std::cos(th), std::sin(th);
    } else {
        const int i = d / nlon, j = d % nlon;
        const double th = (i + 0.5) * kPi / nlat, ph = (j + 0.5) * kTwoPi / nlon;
        v << std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph);
    }
    return v;
}

int DirectionBins::antipode(int d) const {
    if (n == 1) return (d + nb / 2) % nb;
    const int i = d / nlon, j = d % nlon;
    return (nlat - 1 - i) * nlon + (j + nlon / 2) % nlon;
}

double DirectionBins::width() const { return n == 1 ? kTwoPi / nb : kPi / nlat; }

int DirectionBins::weights(const double* xi, std::array<std::pair<int, double>, 4>& out) const {
    int k = 0;
    if (n == 1) {
        const double th = std::atan2(xi[1], xi[0]);
        const double w = kTwoPi / nb;
        double u = th / w;
        int lo = int(std::floor(u));
        const double s = u - lo;
        lo = ((lo % nb) + nb) % nb;
        const double a = tent(s * w, w), b = tent((1.0 - s) * w, w);
        if (a > 0) out[k++] = {lo, a};
        if (b > 0) out[k++] = {(lo + 1) % nb, b};
        return k;
    }
    const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    const double th = std::acos(std::clamp(xi[0] / r, -1.0, 1.0));
    const double ph = std::atan2(xi[2], xi[1]);
    // latitude: clamped tent over centres (i + 1/2) pi / nlat
    std::array<std::pair<int, double>, 2> lat{};
    int nl = 0;
    const double wl = kPi / nlat;
    const double ul = th / wl - 0.5;
    if (ul <= 0) {
        lat[nl++] = {0, 1.0};
    } else if (ul >= nlat - 1) {
        lat[nl++] = {nlat - 1, 1.0};
    } else {
        const int lo = int(std::floor(ul));
        const double s = ul - lo;
        const double a = tent(s * wl, wl), b = tent((1.0 - s) * wl, wl);
        if (a > 0) lat[nl++] = {lo, a};
        if (b > 0) lat[nl++] = {lo + 1, b};
    }
    const double wo = kTwoPi / nlon;
    double uo = ph / wo - 0.5;
    int lo = int(std::floor(uo));
    const double s = uo - lo;
    lo = ((lo % nlon) + nlon) % nlon;
    const double a = tent(s * wo, wo), b = tent((1.0 - s) * wo, wo);
    for (int i = 0; i < nl; ++i) {
        if (a > 0) out[k++] = {lat[i].first * nlon + lo, lat[i].second * a};
        if (b > 0) out[k++] = {lat[i].first * nlon + (lo + 1) % nlon, lat[i].second * b};
    }
    return k;
}

double DirectionBins::weight(int d, const double* xi) const {
    std::array<std::pair<int, double>, 4> w;
    const int k = weights(xi, w);
    for (int i = 0; i < k; ++i)
        if (w[i].first == d) return w[i].second;
    return 0.0;
}

DirectionBins default_bins(int n) {
    DirectionBins b;
    b.n = n;
    return b;
}

DefectMeasureHistogram::DefectMeasureHistogram(const CellLattice& c, const DirectionBins& b, int d)
    : cells(c), bins(b), dim(d) {
    const std::size_t m = entries();
    tilde.assign(m * dim * dim, 0.0);
    lambda_tilde.assign(m * dim, 0.0);
    sigma_tilde.assign(m * dim, 0.0);
    nu.assign(m, 0.0);
    lambda.assign(m, 0.0);
    sigma.assign(m, 0.0);
    nu_err.assign(m, 0.0);
    flags.assign(m, 0);
}

void DefectMeasureHistogram::derive_scalars() {
    for (int c = 0; c < cells.count(); ++c)
        for (int d = 0; d < nbins(); ++d) {
            const std::size_t e = at(c, d);
            double tr = 0.0;
            for (int a = 0; a < dim; ++a) tr += t(c, d, a, a).real();
            nu[e] = tr;
            const Vec xi = bins.center(d);
            double l = 0.0, s = 0.0;
            for (int a = 0; a < dim; ++a) {
                l += xi(a) * lambda_tilde[e * dim + a].real();
                s += xi(a) * sigma_tilde[e * dim + a].real();
            }
            lambda[e] = l;
            sigma[e] = s;
        }
}

double DefectMeasureHistogram::total() const {
    double s = 0.0;
    for (double v : nu) s += v;
    return s;
}

DefectMeasureHistogram DefectMeasureHistogram::symmetrized() const {
    DefectMeasureHistogram h = *this;
    for (int c = 0; c < cells.count(); ++c)
        for (int d = 0; d < nbins(); ++d) {
            const int e = bins.antipode(d);
            h.nu[at(c, d)] = 0.5 * (nu[at(c, d)] + nu[at(c, e)]);
            h.lambda[at(c, d)] = 0.5 * (lambda[at(c, d)] - lambda[at(c, e)]);
            h.sigma[at(c, d)] = 0.5 * (sigma[at(c, d)] - sigma[at(c, e)]);
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) h.t(c, d, a, b) = 0.5 * (t(c, d, a, b) + t(c, e, a, b));
        }
    return h;
}

double DefectMeasureHistogram::odd_mass() const {
    double s = 0.0;
    for (int c = 0; c < cells.count(); ++c)
        for (int d = 0; d < nbins(); ++d) s += 0.5 * std::abs(nu[at(c, d)] - nu[at(c, bins.antipode(d))]);
    return s;
}

double DefectMeasureHistogram::lambda_even_mass() const {
    double s = 0.0;
    for (int c = 0; c < cells.count(); ++c)
        for (int d = 0; d < nbins(); ++d)
            s += 0.5 * std::abs(lambda[at(c, d)] + lambda[at(c, bins.antipode(d))]);
    return s;
}

double relative_l1(const DefectMeasureHistogram& a, const DefectMeasureHistogram& b) {
    if (a.nu.size() != b.nu.size()) throw Error("relative_l1: histogram layouts differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.nu.size(); ++i) {
        num += std::abs(a.nu[i] - b.nu[i]);
        den += std::abs(b.nu[i]);
    }
    return den > 0 ? num / den : num;
}

void write_histogram_csv(const std::string& path, const DefectMeasureHistogram& h, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << header;
    os << "cell,bin";
    for (int a = 0; a < h.dim; ++a) os << ",xi" << a;
    for (int a = 0; a < h.dim; ++a)
        for (int b = 0; b < h.dim; ++b) os << ",re" << a << b << ",im" << a << b;
    os << ",nu,lambda,sigma,err,flag\n";
    os << std::setprecision(12);
    for (int c = 0; c < h.cells.count(); ++c)
        for (int d = 0; d < h.nbins(); ++d) {
            const std::size_t e = h.at(c, d);
            os << c << ',' << d;
            const Vec xi = h.bins.center(d);
            for (int a = 0; a < h.dim; ++a) os << ',' << xi(a);
            for (int a = 0; a < h.dim; ++a)
                for (int b = 0; b < h.dim; ++b) os << ',' << h.t(c, d, a, b).real() << ',' << h.t(c, d, a, b).imag();
            os << ',' << h.nu[e] << ',' << h.lambda[e] << ',' << h.sigma[e] << ',' << h.nu_err[e] << ','
               << h.flags[e] << '\n';
        }
    if (!os) throw Error("write failed: " + path);
}

}  // namespace blab
