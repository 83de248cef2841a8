#include "blab/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <sstream>

namespace blab {

Mat MetricModel::inverse(const Point& p) const { return g(p).inverse(); }

Mat MetricModel::dinverse(const Point& p, int mu) const {
    const double h = 1e-3;
    auto at = [&](double s) {
        Point q = p;
        q[mu] += s;
        return inverse(q);
    };
    return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
}

double MetricModel::sqrt_det(const Point& p) const { return std::sqrt(std::abs(g(p).determinant())); }

MetricModel minkowski(int n) {
    MetricModel m;
    m.n = n;
    m.name = "minkowski";
    m.g = [n](const Point&) {
        Mat g = Mat::Identity(n + 1, n + 1);
        g(0, 0) = -1.0;
        return g;
    };
    return m;
}

MetricModel boosted_minkowski(int n, double v) {
    if (std::abs(v) >= 1.0) throw Error("boost velocity must satisfy |v| < 1");
    const double gam = 1.0 / std::sqrt(1.0 - v * v);
    Mat L = Mat::Identity(n + 1, n + 1);
    L(0, 0) = gam;
    L(0, 1) = -gam * v;
    L(1, 0) = -gam * v;
    L(1, 1) = gam;
    Mat eta = Mat::Identity(n + 1, n + 1);
    eta(0, 0) = -1.0;
    const Mat gb = L.transpose() * eta * L;
    MetricModel m;
    m.n = n;
    m.name = "boosted-minkowski";
    m.g = [gb](const Point&) { return gb; };
    return m;
}

MetricModel static_diagonal(int n, std::function<double(const Point&)> lapse,
                            std::function<double(const Point&, int)> spatial) {
    MetricModel m;
    m.n = n;
    m.name = "static-diagonal";
    m.g = [n, lapse, spatial](const Point& p) {
        Mat g = Mat::Zero(n + 1, n + 1);
        const double N = lapse(p);
        g(0, 0) = -N * N;
        for (int i = 1; i <= n; ++i) g(i, i) = spatial(p, i);
        return g;
    };
    return m;
}

MetricModel unit_density_1d(std::function<double(const Point&)> h) {
    MetricModel m;
    m.n = 1;
    m.name = "unit-density";
    m.g = [h](const Point& p) {
        Mat g = Mat::Zero(2, 2);
        const double v = h(p);
        g(0, 0) = -v;
        g(1, 1) = 1.0 / v;
        return g;
    };
    return m;
}

MetricModel conformally_flat(int n, std::function<double(const Point&)> omega) {
    MetricModel m;
    m.n = n;
    m.name = "conformally-flat";
    m.g = [n, omega](const Point& p) {
        Mat g = Mat::Identity(n + 1, n + 1);
        g(0, 0) = -1.0;
        const double w = omega(p);
        return Mat(g * (w * w));
    };
    return m;
}

FramePoint frame_from_inverse(const Mat& ginv) {
    const int n = int(ginv.rows()) - 1;
    const double g00 = ginv(0, 0);
    FramePoint f;
    f.N = 1.0 / std::sqrt(-g00);
    f.beta = Vec(n);
    f.gtilde = Mat(n, n);
    for (int i = 0; i < n; ++i) f.beta(i) = -ginv(0, i + 1) / g00;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f.gtilde(i, j) = ginv(i + 1, j + 1) - ginv(0, i + 1) * ginv(0, j + 1) / g00;
    return f;
}

double lightcone_form(const FramePoint& f, double ginv00, const Vec& xi) {
    const int n = int(f.beta.size());
    double s = xi(0);
    for (int k = 0; k < n; ++k) s -= f.beta(k) * xi(k + 1);
    double q = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q += f.gtilde(i, j) * xi(i + 1) * xi(j + 1);
    return ginv00 * s * s + q;
}

int sym_count(int dim) { return dim * (dim + 1) / 2; }

int sym_index(int dim, int a, int b) {
    if (a > b) std::swap(a, b);
    // rows a = 0..: offset a*dim - a(a-1)/2
    return a * dim - a * (a - 1) / 2 + (b - a);
}

MetricField MetricField::from_model(const SpacetimeGrid& grid, const MetricModel& m) {
    grid.validate();
    if (m.n != grid.n) throw Error("metric model dimension does not match grid");
    const int dim = grid.n + 1;
    std::vector<Field> comps(sym_count(dim), Field(grid.size()));
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const Mat g = m.g(grid.point(q));
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) comps[sym_index(dim, a, b)][q] = g(a, b);
    }
    return from_components(grid, std::move(comps));
}

MetricField MetricField::from_components(const SpacetimeGrid& grid, std::vector<Field> comps) {
    grid.validate();
    const int dim = grid.n + 1;
    if (int(comps.size()) != sym_count(dim)) throw Error("metric needs (1+n)(2+n)/2 components");
    for (auto& c : comps)
        if (c.size() != grid.size()) throw Error("metric component has wrong size");
    MetricField f;
    f.grid_ = grid;
    f.comps_ = std::move(comps);
    f.build_caches();
    return f;
}

Mat MetricField::lower_at(std::size_t q) const {
    const int d = dim();
    Mat g(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) g(a, b) = comps_[sym_index(d, a, b)][q];
    return g;
}

Mat MetricField::inverse_at(std::size_t q) const {
    const int d = dim();
    Mat g(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) g(a, b) = inv_[sym_index(d, a, b)][q];
    return g;
}

void MetricField::build_caches() {
    const int d = dim(), n = grid_.n;
    const std::size_t sz = grid_.size();
    inv_.assign(sym_count(d), Field(sz));
    gt_.assign(sym_count(n), Field(sz));
    beta_.assign(n, Field(sz));
    N_.assign(sz, 0.0);
    sqrtdet_.assign(sz, 0.0);
    for (std::size_t q = 0; q < sz; ++q) {
        const Mat g = lower_at(q);
        const Mat gi = g.inverse();
        if (!(gi(0, 0) < 0.0)) {
            const Point p = grid_.point(q);
            std::ostringstream os;
            os << "metric is not Lorentzian (g^00 = " << gi(0, 0) << " >= 0) at t=" << p[0] << " x=" << p[1];
            if (n == 2) os << "," << p[2];
            throw Error(os.str());
        }
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) inv_[sym_index(d, a, b)][q] = gi(a, b);
        const FramePoint f = frame_from_inverse(gi);
        N_[q] = f.N;
        for (int i = 0; i < n; ++i) beta_[i][q] = f.beta(i);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) gt_[sym_index(n, i, j)][q] = f.gtilde(i, j);
        sqrtdet_[q] = std::sqrt(std::abs(g.determinant()));
    }
}

CauchyFrame cauchy_frame(const MetricField& g) {
    CauchyFrame c;
    const int n = g.grid().n;
    c.N = g.lapse();
    for (int i = 1; i <= n; ++i) c.beta.push_back(g.shift(i));
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) c.gtilde.push_back(g.gtilde(i, j));
    return c;
}

Field box_apply(const MetricField& g, const Field& u) {
    const SpacetimeGrid& G = g.grid();
    if (u.size() != G.size()) throw Error("box_apply: field does not live on the metric grid");
    const int d = g.dim();
    const std::size_t sz = G.size(), ss = G.slice_size();
    const Field& sg = g.sqrtdet();
    std::vector<Field> du(d);
    for (int b = 0; b < d; ++b) du[b] = d_coord(G, u, b);
    Field out(sz, 0.0);
    for (int a = 0; a < d; ++a) {
        Field flux(sz, 0.0);
        for (int b = 0; b < d; ++b) {
            if (a == 0 && b == 0) continue;  // handled below
            const Field& gi = g.ginv(a, b);
            for (std::size_t q = 0; q < sz; ++q) flux[q] += gi[q] * du[b][q];
        }
        for (std::size_t q = 0; q < sz; ++q) flux[q] *= sg[q];
        const Field df = d_coord(G, flux, a);
        for (std::size_t q = 0; q < sz; ++q) out[q] += df[q];
    }
    // d_t(A d_t u) with A = sqrt|g| g^{00}: compact three-point form inside the
    // slab, product rule with one-sided stencils on the two end slices (nesting
    // one-sided first derivatives would drop to first order next to the ends).
    Field A(sz);
    for (std::size_t q = 0; q < sz; ++q) A[q] = sg[q] * g.ginv(0, 0)[q];
    const double h2 = 1.0 / (G.dt() * G.dt());
    for (int k = 1; k < G.Nt; ++k)
        for (std::size_t r = 0; r < ss; ++r) {
            const std::size_t q = std::size_t(k) * ss + r;
            const double ap = 0.5 * (A[q] + A[q + ss]), am = 0.5 * (A[q] + A[q - ss]);
            out[q] += (ap * (u[q + ss] - u[q]) - am * (u[q] - u[q - ss])) * h2;
        }
    const Field dA = d_time(G, A), utt = d2_time(G, u);
    for (int k : {0, G.Nt})
        for (std::size_t r = 0; r < ss; ++r) {
            const std::size_t q = std::size_t(k) * ss + r;
            out[q] += A[q] * utt[q] + dA[q] * du[0][q];
        }
    for (std::size_t q = 0; q < sz; ++q) out[q] /= sg[q];
    return out;
}

Field box_apply_frame(const MetricField& g, const Field& u) {
    const SpacetimeGrid& G = g.grid();
    if (u.size() != G.size()) throw Error("box_apply_frame: field does not live on the metric grid");
    const int n = G.n, d = n + 1;
    const std::size_t sz = G.size();
    std::vector<Field> du(d);
    for (int b = 0; b < d; ++b) du[b] = d_coord(G, u, b);

    Field e0u = du[0];
    for (int i = 1; i <= n; ++i)
        for (std::size_t q = 0; q < sz; ++q) e0u[q] -= g.shift(i)[q] * du[i][q];
    // e0 e0 u expanded so that only d2_time touches the slab ends:
    // u_tt - 2 b^i u_ti + b^i b^j u_ij - (e0 b^j) u_j
    Field e0e0u = d2_time(G, u);
    for (int i = 1; i <= n; ++i) {
        const Field& bi = g.shift(i);
        const Field uti = d_time(G, du[i]);
        for (std::size_t q = 0; q < sz; ++q) e0e0u[q] -= 2.0 * bi[q] * uti[q];
        for (int j = 1; j <= n; ++j) {
            const Field uij = d2_coord(G, u, i, j);
            const Field& bj = g.shift(j);
            for (std::size_t q = 0; q < sz; ++q) e0e0u[q] += bi[q] * bj[q] * uij[q];
        }
        Field e0b = d_time(G, bi);
        for (int k = 1; k <= n; ++k) {
            const Field dkb = d_space(G, bi, k);
            for (std::size_t q = 0; q < sz; ++q) e0b[q] -= g.shift(k)[q] * dkb[q];
        }
        for (std::size_t q = 0; q < sz; ++q) e0e0u[q] -= e0b[q] * du[i][q];
    }

    const Field& g00 = g.ginv(0, 0);
    const Field dg00 = d_time(G, g00);
    Field q(sz);  // det gtilde = |det g^{-1}| / (-g^{00})
    for (std::size_t p = 0; p < sz; ++p) {
        if (n == 1)
            q[p] = g.gtilde(1, 1)[p];
        else
            q[p] = g.gtilde(1, 1)[p] * g.gtilde(2, 2)[p] - g.gtilde(1, 2)[p] * g.gtilde(1, 2)[p];
    }
    const Field dq = d_time(G, q);
    const Field& sg = g.sqrtdet();

    Field out(sz, 0.0);
    for (std::size_t p = 0; p < sz; ++p)
        out[p] = g00[p] * e0e0u[p] + 0.5 * dg00[p] * e0u[p] - g00[p] / (2.0 * q[p]) * dq[p] * e0u[p];
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            const Field dij = d2_coord(G, u, i, j);
            const Field& gt = g.gtilde(i, j);
            for (std::size_t p = 0; p < sz; ++p) out[p] += gt[p] * dij[p];
        }
    for (int i = 1; i <= n; ++i) {
        const Field dsg = d_space(G, sg, i);
        for (int b = 0; b < d; ++b) {
            const Field dgib = d_space(G, g.ginv(i, b), i);
            const Field& gib = g.ginv(i, b);
            for (std::size_t p = 0; p < sz; ++p) out[p] += (dgib[p] + gib[p] * dsg[p] / sg[p]) * du[b][p];
        }
    }
    for (int j = 1; j <= n; ++j) {
        Field ratio(sz);
        for (std::size_t p = 0; p < sz; ++p) ratio[p] = g.ginv(0, j)[p] / g00[p];
        for (int i = 1; i <= n; ++i) {
            const Field dr = d_space(G, ratio, i);
            const Field& g0i = g.ginv(0, i);
            for (std::size_t p = 0; p < sz; ++p) out[p] -= g0i[p] * dr[p] * du[j][p];
        }
    }
    return out;
}

double mass_shell(const Mat& ginv, const Vec& xi) { return xi.dot(ginv * xi); }

double mass_shell(const MetricField& g, std::size_t q, const Vec& xi) { return mass_shell(g.inverse_at(q), xi); }

namespace {

SliceCoefficients coefficients_from(const SpatialGrid& s, double t, const std::function<Mat(std::size_t)>& ginv_at,
                                    const std::function<double(std::size_t)>& sqrtg_at) {
    const int n = s.n, d = n + 1;
    SliceCoefficients c;
    c.s = s;
    c.t = t;
    const std::size_t sz = s.size();
    c.sqrtg.assign(sz, 0.0);
    c.ginv00.assign(sz, 0.0);
    c.N.assign(sz, 0.0);
    c.beta.assign(n, Field(sz));
    c.gt.assign(sym_count(n), Field(sz));
    c.ginv.assign(sym_count(d), Field(sz));
    for (std::size_t r = 0; r < sz; ++r) {
        const Mat gi = ginv_at(r);
        if (!(gi(0, 0) < 0.0)) throw Error("metric slice is not Lorentzian");
        const FramePoint f = frame_from_inverse(gi);
        c.sqrtg[r] = sqrtg_at(r);
        c.ginv00[r] = gi(0, 0);
        c.N[r] = f.N;
        for (int i = 0; i < n; ++i) c.beta[i][r] = f.beta(i);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) c.gt[sym_index(n, i, j)][r] = f.gtilde(i, j);
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) c.ginv[sym_index(d, a, b)][r] = gi(a, b);
    }
    return c;
}

Point slice_point(const SpatialGrid& s, std::size_t r, double t) {
    Point p{t, 0.0, 0.0};
    if (s.n == 1) {
        p[1] = double(r) * s.dx();
    } else {
        p[1] = double(r / s.Nx) * s.dx();
        p[2] = double(r % s.Nx) * s.dx();
    }
    return p;
}

}  // namespace

SliceCoefficients slice_coefficients(const SpatialGrid& s, const MetricModel& m, double t) {
    std::vector<Mat> lower(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) lower[r] = m.g(slice_point(s, r, t));
    return coefficients_from(
        s, t, [&](std::size_t r) { return Mat(lower[r].inverse()); },
        [&](std::size_t r) { return std::sqrt(std::abs(lower[r].determinant())); });
}

SliceCoefficients slice_coefficients(const MetricField& g, int k) {
    const SpacetimeGrid& G = g.grid();
    const std::size_t o = std::size_t(k) * G.slice_size();
    return coefficients_from(
        G.spatial(), k * G.dt(), [&](std::size_t r) { return g.inverse_at(o + r); },
        [&](std::size_t r) { return g.sqrtdet()[o + r]; });
}

double max_light_speed(const SliceCoefficients& c) {
    double cmax = 0.0;
    const int n = c.s.n;
    for (std::size_t r = 0; r < c.s.size(); ++r)
        for (int i = 0; i < n; ++i) {
            const double v = std::abs(c.beta[i][r]) + c.N[r] * std::sqrt(c.gt[sym_index(n, i, i)][r]);
            cmax = std::max(cmax, v);
        }
    return cmax;
}

MetricModel OscillatingMetricFamily::level(std::size_t k) const {
    const double lam = lambdas.at(k);
    MetricModel m;
    m.n = base.n;
    m.name = base.name + "+osc";
    auto b = base.g;
    auto s = shape;
    auto ph = phase;
    m.g = [b, s, ph, lam](const Point& p) { return Mat(b(p) + lam * std::sin(ph(p) / lam) * s(p)); };
    return m;
}

std::vector<double> geometric_ladder(double x0, double ratio, int depth) {
    if (depth < 1) throw Error("ladder depth must be >= 1");
    std::vector<double> v(depth);
    for (int k = 0; k < depth; ++k) v[k] = x0 * std::pow(ratio, k);
    return v;
}

MetricValidity check_metric(const SpacetimeGrid& grid, const MetricModel& m) {
    MetricValidity r;
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const Point p = grid.point(q);
        const Mat gi = m.inverse(p);
        std::ostringstream os;
        if (!(gi(0, 0) < 0.0)) {
            os << "g^00 >= 0 at t=" << p[0] << " x=" << p[1];
            r.ok = false;
            r.message = os.str();
            return r;
        }
        const FramePoint f = frame_from_inverse(gi);
        Eigen::SelfAdjointEigenSolver<Mat> es(f.gtilde);
        const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        if (lo < 1e-3 || hi > 1e3) {
            os << "spatial inverse metric eigenvalues [" << lo << ", " << hi << "] outside [1e-3, 1e3] at t=" << p[0]
               << " x=" << p[1];
            r.ok = false;
            r.message = os.str();
            return r;
        }
    }
    return r;
}

OscillatingMetricFamily oscillating_family(const MetricModel& base, std::function<Mat(const Point&)> shape,
                                           std::function<double(const Point&)> phase,
                                           std::vector<double> lambdas, const SpacetimeGrid& check_grid) {
    OscillatingMetricFamily fam{base, std::move(shape), std::move(phase), std::move(lambdas)};
    for (std::size_t k = 0; k < fam.depth(); ++k) {
        const MetricValidity v = check_metric(check_grid, fam.level(k));
        if (!v.ok)
            throw Error("oscillating family loses Lorentzian signature at level " + std::to_string(k) +
                        " (lambda=" + std::to_string(fam.lambdas[k]) + "): " + v.message);
    }
    return fam;
}

bool BurnettReport::all_ok() const {
    for (bool b : bound_ok)
        if (!b) return false;
    return product_ok;
}

namespace {

// Sup norm over all first (k = 1) or second (k = 2) coordinate derivatives,
// restricted to the slab interior (one-sided end stencils excluded).
double derivative_sup(const SpacetimeGrid& G, const Field& f, int k) {
    const int d = G.n + 1;
    const std::size_t ss = G.slice_size();
    auto interior_sup = [&](const Field& v) {
        double m = 0.0;
        for (std::size_t q = ss; q + ss < v.size(); ++q) m = std::max(m, std::abs(v[q]));
        return m;
    };
    if (k == 0) return interior_sup(f);
    double m = 0.0;
    if (k == 1) {
        for (int a = 0; a < d; ++a) m = std::max(m, interior_sup(d_coord(G, f, a)));
    } else {
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) m = std::max(m, interior_sup(d2_coord(G, f, a, b)));
    }
    return m;
}

void finish_report(BurnettReport& r) {
    const double tol = 0.1;
    r.slopes.clear();
    r.constants.clear();
    r.bound_ok.clear();
    for (int k = 0; k < 3; ++k) {
        const SlopeFit s = fit_loglog(r.lambdas, r.norms[k]);
        r.slopes.push_back(s);
        double c = 0.0;
        for (std::size_t l = 0; l < r.lambdas.size(); ++l)
            c = std::max(c, r.norms[k][l] / std::pow(r.lambdas[l], 1.0 - k));
        r.constants.push_back(c);
        r.bound_ok.push_back(!s.defined || s.slope >= (1.0 - k) - tol);
    }
    if (!r.product.empty()) {
        r.product_slope = fit_loglog(r.lambdas, r.product);
        r.product_ok = !r.product_slope.defined || r.product_slope.slope >= -tol;
    }
}

}  // namespace

BurnettReport burnett_rate_check(const OscillatingMetricFamily& fam, const SpacetimeGrid& grid) {
    if (fam.depth() < 3) throw Error("burnett_rate_check needs at least 3 ladder levels");
    BurnettReport r;
    r.lambdas = fam.lambdas;
    r.norms.assign(3, std::vector<double>(fam.depth(), 0.0));
    const MetricField base = MetricField::from_model(grid, fam.base);
    for (std::size_t l = 0; l < fam.depth(); ++l) {
        const MetricField gl = MetricField::from_model(grid, fam.level(l));
        for (std::size_t c = 0; c < gl.components().size(); ++c) {
            Field h(grid.size());
            for (std::size_t q = 0; q < h.size(); ++q) h[q] = gl.components()[c][q] - base.components()[c][q];
            for (int k = 0; k < 3; ++k) r.norms[k][l] = std::max(r.norms[k][l], derivative_sup(grid, h, k));
        }
    }
    finish_report(r);
    return r;
}

BurnettReport burnett_rate_check(const SpacetimeGrid& grid, const std::vector<double>& lambdas,
                                 const std::vector<Field>& fields, const Field* limit,
                                 const std::vector<double>* h_sup) {
    if (lambdas.size() < 3 || fields.size() != lambdas.size())
        throw Error("burnett_rate_check needs at least 3 ladder levels with one field each");
    BurnettReport r;
    r.lambdas = lambdas;
    r.norms.assign(3, std::vector<double>(lambdas.size(), 0.0));
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        Field h = fields[l];
        if (limit)
            for (std::size_t q = 0; q < h.size(); ++q) h[q] -= (*limit)[q];
        for (int k = 0; k < 3; ++k) r.norms[k][l] = derivative_sup(grid, h, k);
        if (h_sup) {
            const int d = grid.n + 1;
            double l4 = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) l4 = std::max(l4, lp_norm(grid, d2_coord(grid, h, a, b), 4.0));
            r.product.push_back(h_sup->at(l) * l4);
        }
    }
    finish_report(r);
    return r;
}

std::vector<Field> ricci_tensor(const MetricField& g) {
    const SpacetimeGrid& G = g.grid();
    return ricci_generic(g.dim(), g.components(), [&](const Field& f, int a) { return d_coord(G, f, a); });
}

// Ricci tensor R_{mn} = d_l G^l_{mn} - d_n G^l_{ml} + G^l_{ls} G^s_{mn} - G^l_{ns} G^s_{ml}
// from lower components (lexicographic) and a coordinate derivative operator.
std::vector<Field> ricci_generic(int dim, const std::vector<Field>& comps,
                                 const std::function<Field(const Field&, int)>& d) {
    const std::size_t sz = comps.at(0).size();
    std::vector<Field> inv(sym_count(dim), Field(sz));
    for (std::size_t q = 0; q < sz; ++q) {
        Mat g(dim, dim);
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) g(a, b) = comps[sym_index(dim, a, b)][q];
        const Mat gi = g.inverse();
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) inv[sym_index(dim, a, b)][q] = gi(a, b);
    }
    // dg[c][s] = d_c g_s (s symmetric index)
    std::vector<std::vector<Field>> dg(dim);
    for (int c = 0; c < dim; ++c)
        for (const Field& f : comps) dg[c].push_back(d(f, c));
    auto DG = [&](int c, int a, int b) -> const Field& { return dg[c][sym_index(dim, a, b)]; };
    // Gamma[l][sym(m,n)]
    std::vector<std::vector<Field>> Gam(dim, std::vector<Field>(sym_count(dim), Field(sz, 0.0)));
    for (int l = 0; l < dim; ++l)
        for (int m = 0; m < dim; ++m)
            for (int n = m; n < dim; ++n) {
                Field& out = Gam[l][sym_index(dim, m, n)];
                for (int s = 0; s < dim; ++s) {
                    const Field& gi = inv[sym_index(dim, l, s)];
                    const Field &a = DG(m, s, n), &b = DG(n, s, m), &c = DG(s, m, n);
                    for (std::size_t q = 0; q < sz; ++q) out[q] += 0.5 * gi[q] * (a[q] + b[q] - c[q]);
                }
            }
    auto G = [&](int l, int m, int n) -> const Field& { return Gam[l][sym_index(dim, m, n)]; };
    std::vector<Field> R(sym_count(dim), Field(sz, 0.0));
    // contracted Gamma^l_{lm}
    std::vector<Field> trG(dim, Field(sz, 0.0));
    for (int m = 0; m < dim; ++m)
        for (int l = 0; l < dim; ++l) {
            const Field& f = G(l, l, m);
            for (std::size_t q = 0; q < sz; ++q) trG[m][q] += f[q];
        }
    for (int m = 0; m < dim; ++m)
        for (int n = m; n < dim; ++n) {
            Field& out = R[sym_index(dim, m, n)];
            for (int l = 0; l < dim; ++l) {
                const Field dl = d(G(l, m, n), l);
                for (std::size_t q = 0; q < sz; ++q) out[q] += dl[q];
            }
            const Field dn = d(trG[m], n);
            for (std::size_t q = 0; q < sz; ++q) out[q] -= dn[q];
            for (int s = 0; s < dim; ++s) {
                const Field& a = G(s, m, n);
                for (std::size_t q = 0; q < sz; ++q) out[q] += trG[s][q] * a[q];
                for (int l = 0; l < dim; ++l) {
                    const Field &b = G(l, n, s), &c = G(s, m, l);
                    for (std::size_t q = 0; q < sz; ++q) out[q] -= b[q] * c[q];
                }
            }
        }
    return R;
}

}  // namespace blab
