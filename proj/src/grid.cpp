#include "blab/grid.hpp"

#include <algorithm>
#include <numeric>

namespace blab {

void SpatialGrid::validate() const {
    if (n != 1 && n != 2) throw Error("spatial dimension must be 1 or 2, got " + std::to_string(n));
    if (!(L > 0.0) || Nx < 4) throw Error("spatial grid needs L > 0 and Nx >= 4");
}

void SpacetimeGrid::validate() const {
    spatial().validate();
    if (!(T > 0.0) || Nt < 3) throw Error("time slab needs T > 0 and Nt >= 3");
}

Point SpacetimeGrid::point(std::size_t flat) const {
    const std::size_t ss = slice_size();
    const int k = int(flat / ss);
    const std::size_t r = flat % ss;
    Point p{k * dt(), 0.0, 0.0};
    if (n == 1) {
        p[1] = double(r) * dx();
    } else {
        p[1] = double(r / Nx) * dx();
        p[2] = double(r % Nx) * dx();
    }
    return p;
}

void require_same(const SpacetimeGrid& a, const SpacetimeGrid& b, const char* what) {
    if (!(a == b)) throw Error(std::string("grid mismatch: ") + what);
}

namespace {

// Shift along a spatial axis on a single slice: returns index of neighbour.
inline std::size_t neighbour(const SpatialGrid& s, std::size_t r, int axis, int off) {
    if (s.n == 1) return std::size_t(s.wrap(int(r) + off));
    const int i1 = int(r / s.Nx), i2 = int(r % s.Nx);
    return axis == 1 ? s.idx(i1 + off, i2) : s.idx(i1, i2 + off);
}

}  // namespace

Field d_slice(const SpatialGrid& s, const Field& f, int axis) {
    Field out(f.size());
    const double h = 1.0 / (2.0 * s.dx());
    for (std::size_t r = 0; r < f.size(); ++r)
        out[r] = (f[neighbour(s, r, axis, 1)] - f[neighbour(s, r, axis, -1)]) * h;
    return out;
}

Field d2_slice(const SpatialGrid& s, const Field& f, int a, int b) {
    if (a == b) {
        Field out(f.size());
        const double h = 1.0 / (s.dx() * s.dx());
        for (std::size_t r = 0; r < f.size(); ++r)
            out[r] = (f[neighbour(s, r, a, 1)] - 2.0 * f[r] + f[neighbour(s, r, a, -1)]) * h;
        return out;
    }
    return d_slice(s, d_slice(s, f, b), a);
}

Field laplacian_slice(const SpatialGrid& s, const Field& f) {
    Field out = d2_slice(s, f, 1, 1);
    if (s.n == 2) {
        Field yy = d2_slice(s, f, 2, 2);
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += yy[r];
    }
    return out;
}

Field d_time(const SpacetimeGrid& g, const Field& f) {
    const std::size_t ss = g.slice_size();
    const int K = g.Nt;
    Field out(f.size());
    const double h = 1.0 / (2.0 * g.dt());
    for (int k = 0; k <= K; ++k) {
        for (std::size_t r = 0; r < ss; ++r) {
            auto at = [&](int kk) { return f[std::size_t(kk) * ss + r]; };
            double v;
            if (k == 0)
                v = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * h;
            else if (k == K)
                v = (3.0 * at(K) - 4.0 * at(K - 1) + at(K - 2)) * h;
            else
                v = (at(k + 1) - at(k - 1)) * h;
            out[std::size_t(k) * ss + r] = v;
        }
    }
    return out;
}

Field d2_time(const SpacetimeGrid& g, const Field& f) {
    const std::size_t ss = g.slice_size();
    const int K = g.Nt;
    Field out(f.size());
    const double h = 1.0 / (g.dt() * g.dt());
    for (int k = 0; k <= K; ++k) {
        for (std::size_t r = 0; r < ss; ++r) {
            auto at = [&](int kk) { return f[std::size_t(kk) * ss + r]; };
            double v;
            if (k == 0)
                v = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * h;
            else if (k == K)
                v = (2.0 * at(K) - 5.0 * at(K - 1) + 4.0 * at(K - 2) - at(K - 3)) * h;
            else
                v = (at(k + 1) - 2.0 * at(k) + at(k - 1)) * h;
            out[std::size_t(k) * ss + r] = v;
        }
    }
    return out;
}

Field d_space(const SpacetimeGrid& g, const Field& f, int axis) {
    const SpatialGrid s = g.spatial();
    const std::size_t ss = s.size();
    Field out(f.size());
    const double h = 1.0 / (2.0 * s.dx());
    for (int k = 0; k < g.nt(); ++k) {
        const std::size_t o = std::size_t(k) * ss;
        for (std::size_t r = 0; r < ss; ++r)
            out[o + r] = (f[o + neighbour(s, r, axis, 1)] - f[o + neighbour(s, r, axis, -1)]) * h;
    }
    return out;
}

Field d2_space(const SpacetimeGrid& g, const Field& f, int axis) {
    const SpatialGrid s = g.spatial();
    const std::size_t ss = s.size();
    Field out(f.size());
    const double h = 1.0 / (s.dx() * s.dx());
    for (int k = 0; k < g.nt(); ++k) {
        const std::size_t o = std::size_t(k) * ss;
        for (std::size_t r = 0; r < ss; ++r)
            out[o + r] = (f[o + neighbour(s, r, axis, 1)] - 2.0 * f[o + r] + f[o + neighbour(s, r, axis, -1)]) * h;
    }
    return out;
}

Field d_coord(const SpacetimeGrid& g, const Field& f, int alpha) {
    return alpha == 0 ? d_time(g, f) : d_space(g, f, alpha);
}

Field d2_coord(const SpacetimeGrid& g, const Field& f, int a, int b) {
    if (a == b) return a == 0 ? d2_time(g, f) : d2_space(g, f, a);
    return d_coord(g, d_coord(g, f, b), a);
}

double integrate(const SpacetimeGrid& g, const Field& f) {
    const std::size_t ss = g.slice_size();
    double total = 0.0;
    for (int k = 0; k < g.nt(); ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < ss; ++r) s += f[std::size_t(k) * ss + r];
        total += (k == 0 || k == g.Nt) ? 0.5 * s : s;
    }
    return total * g.dt() * std::pow(g.dx(), g.n);
}

double integrate(const SpatialGrid& g, const Field& f) {
    return std::accumulate(f.begin(), f.end(), 0.0) * std::pow(g.dx(), g.n);
}

double sup_norm(const Field& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

double lp_norm(const SpacetimeGrid& g, const Field& f, double p) {
    Field a(f.size());
    for (std::size_t q = 0; q < f.size(); ++q) a[q] = std::pow(std::abs(f[q]), p);
    return std::pow(integrate(g, a), 1.0 / p);
}

Field extract_slice(const SpacetimeGrid& g, const Field& f, int k) {
    const std::size_t ss = g.slice_size();
    return Field(f.begin() + std::ptrdiff_t(k * ss), f.begin() + std::ptrdiff_t((k + 1) * ss));
}

double smooth_step(double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / y), b = std::exp(-1.0 / (1.0 - y));
    return a / (a + b);
}

double bump(double x, double c, double r) {
    const double s = (x - c) / r;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    SlopeFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] > 0.0 && std::abs(y[i]) > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(std::abs(y[i])));
        }
    }
    const std::size_t m = lx.size();
    if (m < 2) return fit;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.defined = true;
    if (m > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
            sse += e * e;
        }
        // Two-sided 95% Student-t quantiles for small dof, 1.96 beyond.
        static const double tq[] = {12.71, 4.30, 3.18, 2.78, 2.57, 2.45, 2.36, 2.31, 2.26, 2.23};
        const std::size_t dof = m - 2;
        const double t = dof <= 10 ? tq[dof - 1] : 1.96;
        fit.halfwidth = t * std::sqrt(sse / double(dof) / sxx);
    }
    return fit;
}

}  // namespace blab
