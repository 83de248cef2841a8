#include "blab/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "blab/fft.hpp"

namespace blab {

InitialPhase plane_phase(const std::vector<double>& k) {
    InitialPhase p;
    p.value = [k](const double* x) {
        double s = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * x[i];
        return s;
    };
    p.gradient = [k](const double*, double* g) {
        for (std::size_t i = 0; i < k.size(); ++i) g[i] = k[i];
    };
    return p;
}

double null_xi0(const Mat& ginv, const double* xs, Branch b) {
    const FramePoint f = frame_from_inverse(ginv);
    const int n = int(ginv.rows()) - 1;
    double bx = 0.0, q = 0.0;
    for (int i = 0; i < n; ++i) {
        bx += f.beta(i) * xs[i];
        for (int j = 0; j < n; ++j) q += f.gtilde(i, j) * xs[i] * xs[j];
    }
    // x0-dot = g^{00}(xi_0 - beta.xi) > 0 on the future branch
    const double s = b == Branch::future ? -1.0 : 1.0;
    return bx + s * f.N * std::sqrt(std::max(q, 0.0));
}

namespace {

// Periodic four-point Lagrange interpolation on a slice.
struct SliceInterp {
    SpatialGrid s;

    void stencil(double y, int& i0, double w[4]) const {
        const double u = y / s.dx();
        const double fl = std::floor(u);
        i0 = int(fl) - 1;
        const double t = u - fl;
        w[0] = -t * (t - 1) * (t - 2) / 6.0;
        w[1] = (t + 1) * (t - 1) * (t - 2) / 2.0;
        w[2] = -(t + 1) * t * (t - 2) / 2.0;
        w[3] = (t + 1) * t * (t - 1) / 6.0;
    }

    double operator()(const Field& f, const double* y) const {
        int i0, j0;
        double wi[4], wj[4];
        stencil(y[0], i0, wi);
        if (s.n == 1) {
            double r = 0.0;
            for (int a = 0; a < 4; ++a) r += wi[a] * f[s.idx(i0 + a)];
            return r;
        }
        stencil(y[1], j0, wj);
        double r = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) r += wi[a] * wj[b] * f[s.idx(i0 + a, j0 + b)];
        return r;
    }
};

// Spectral derivative of a periodic slice field along `axis` (1..n).
Field spectral_d(const SpatialGrid& s, const Field& f, int axis) {
    std::vector<int> dims(s.n, s.Nx);
    Fft fft(dims);
    CField c(f.begin(), f.end());
    fft.forward(c);
    const double unit = kTwoPi / s.L;
    for (std::size_t q = 0; q < c.size(); ++q) {
        const int i = s.n == 1 ? int(q) : (axis == 1 ? int(q / s.Nx) : int(q % s.Nx));
        const int k = signed_mode(i, s.Nx);
        const double kk = (2 * std::abs(k) == s.Nx) ? 0.0 : unit * k;
        c[q] *= cplx(0.0, kk);
    }
    fft.inverse(c);
    Field out(f.size());
    for (std::size_t q = 0; q < c.size(); ++q) out[q] = c[q].real();
    return out;
}

struct RayRhs {
    const MetricModel& g;
    Branch branch;
    int n;

    // state: x[0..n), xi[n..2n)
    void operator()(double t, const double* st, double* out, double* xdot0 = nullptr) const {
        const Point p{t, st[0], n == 2 ? st[1] : 0.0};
        const Mat gi = g.inverse(p);
        Vec xi(n + 1);
        xi(0) = null_xi0(gi, st + n, branch);
        for (int i = 0; i < n; ++i) xi(i + 1) = st[n + i];
        const Vec xd = gi * xi;
        const double x0 = xd(0);
        if (xdot0) *xdot0 = x0;
        for (int i = 0; i < n; ++i) out[i] = xd(i + 1) / x0;
        for (int i = 0; i < n; ++i) {
            const Mat dg = g.dinverse(p, i + 1);
            out[n + i] = -0.5 * xi.dot(dg * xi) / x0;
        }
    }
};

double sqrtg_xdot0(const MetricModel& g, const Point& p, const double* xs, Branch b, int n) {
    const Mat gi = g.inverse(p);
    Vec xi(n + 1);
    xi(0) = null_xi0(gi, xs, b);
    for (int i = 0; i < n; ++i) xi(i + 1) = xs[i];
    return g.sqrt_det(p) * (gi * xi)(0);
}

}  // namespace

PhaseField eikonal_solve(const MetricModel& g, const SpacetimeGrid& G, const InitialPhase& phi0,
                         const EikonalOptions& opt) {
    G.validate();
    if (g.n != G.n) throw Error("eikonal_solve: metric and grid dimensions differ");
    const int n = G.n;
    const SpatialGrid S = G.spatial();
    const std::size_t ss = S.size();
    const SliceInterp interp{S};
    const RayRhs rhs{g, opt.branch, n};

    PhaseField P;
    P.grid = G;
    P.phi.assign(G.size(), 0.0);
    P.dphi.assign(n + 1, Field(G.size(), 0.0));
    P.origin.assign(n, Field(G.size(), 0.0));
    P.transport.assign(G.size(), 0.0);

    // ray state per foot point
    std::vector<double> st(ss * 2 * n);
    std::vector<double> y0(ss * n), grad0(ss * n);
    for (std::size_t r = 0; r < ss; ++r) {
        double y[2] = {S.x(n == 1 ? int(r) : int(r / S.Nx)), n == 2 ? S.x(int(r % S.Nx)) : 0.0};
        double gr[2] = {0, 0};
        phi0.gradient(y, gr);
        bool nonzero = false;
        for (int i = 0; i < n; ++i) {
            y0[r * n + i] = y[i];
            grad0[r * n + i] = gr[i];
            st[r * 2 * n + i] = y[i];
            st[r * 2 * n + n + i] = gr[i];
            nonzero = nonzero || gr[i] != 0.0;
        }
        if (!nonzero) throw Error("eikonal_solve: initial phase gradient vanishes at a grid point");
    }

    std::vector<Field> D(n, Field(ss)), Xi(n, Field(ss));
    Field J(ss), xd0(ss);
    const double h = G.dt() / opt.substeps;
    std::vector<double> k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);

    for (int k = 0; k <= G.Nt; ++k) {
        const double t = k * G.dt();
        if (k > 0) {
            for (int sub = 0; sub < opt.substeps; ++sub) {
                const double t0 = t - G.dt() + sub * h;
                for (std::size_t r = 0; r < ss; ++r) {
                    double* s = &st[r * 2 * n];
                    rhs(t0, s, k1.data());
                    for (int i = 0; i < 2 * n; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
                    rhs(t0 + 0.5 * h, tmp.data(), k2.data());
                    for (int i = 0; i < 2 * n; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
                    rhs(t0 + 0.5 * h, tmp.data(), k3.data());
                    for (int i = 0; i < 2 * n; ++i) tmp[i] = s[i] + h * k3[i];
                    rhs(t0 + h, tmp.data(), k4.data());
                    for (int i = 0; i < 2 * n; ++i) s[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
                }
            }
        }
        for (std::size_t r = 0; r < ss; ++r)
            for (int i = 0; i < n; ++i) {
                D[i][r] = st[r * 2 * n + i] - y0[r * n + i];
                Xi[i][r] = st[r * 2 * n + n + i];
            }
        // ray-map Jacobian dX/dy = I + dD/dy
        std::vector<std::vector<Field>> dD(n, std::vector<Field>(n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dD[i][j] = spectral_d(S, D[i], j + 1);
        double jmin = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < ss; ++r) {
            if (n == 1) {
                J[r] = 1.0 + dD[0][0][r];
            } else {
                J[r] = (1.0 + dD[0][0][r]) * (1.0 + dD[1][1][r]) - dD[0][1][r] * dD[1][0][r];
            }
            jmin = std::min(jmin, J[r]);
        }
        if (jmin < opt.caustic_ratio) {
            P.caustic = true;
            P.caustic_time = t;
            return P;
        }
        // eikonal residual on the rays, with d phi rebuilt from the Jacobian
        for (std::size_t r = 0; r < ss; ++r) {
            double xdot[2];
            rhs(t, &st[r * 2 * n], tmp.data(), &xd0[r]);
            for (int i = 0; i < n; ++i) xdot[i] = tmp[i];
            Vec eta(n + 1);
            if (n == 1) {
                eta(1) = grad0[r] / J[r];
            } else {
                const double a = 1.0 + dD[0][0][r], b = dD[0][1][r], c = dD[1][0][r], d = 1.0 + dD[1][1][r];
                // eta_i = (J^{-T} grad0)_i with J_ij = dX^i / dy^j
                eta(1) = (d * grad0[r * 2] - c * grad0[r * 2 + 1]) / J[r];
                eta(2) = (-b * grad0[r * 2] + a * grad0[r * 2 + 1]) / J[r];
            }
            eta(0) = 0.0;
            for (int i = 0; i < n; ++i) eta(0) -= eta(i + 1) * xdot[i];
            const Point p{t, st[r * 2 * n], n == 2 ? st[r * 2 * n + 1] : 0.0};
            const double res = std::abs(mass_shell(g.inverse(p), eta)) / eta.squaredNorm();
            P.max_residual = std::max(P.max_residual, res);
        }
        // invert the ray map at every grid point of this level
        for (std::size_t r = 0; r < ss; ++r) {
            double x[2] = {S.x(n == 1 ? int(r) : int(r / S.Nx)), n == 2 ? S.x(int(r % S.Nx)) : 0.0};
            double y[2] = {x[0], x[1]};
            for (int i = 0; i < n; ++i) y[i] = x[i] - interp(D[i], x);
            for (int it = 0; it < 40; ++it) {
                double f[2], m[2][2];
                for (int i = 0; i < n; ++i) {
                    f[i] = y[i] + interp(D[i], y) - x[i];
                    for (int j = 0; j < n; ++j) m[i][j] = (i == j ? 1.0 : 0.0) + interp(dD[i][j], y);
                }
                double step[2];
                if (n == 1) {
                    step[0] = f[0] / m[0][0];
                } else {
                    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                    step[0] = (m[1][1] * f[0] - m[0][1] * f[1]) / det;
                    step[1] = (-m[1][0] * f[0] + m[0][0] * f[1]) / det;
                }
                double sz = 0.0;
                for (int i = 0; i < n; ++i) {
                    y[i] -= step[i];
                    sz = std::max(sz, std::abs(step[i]));
                }
                if (sz < 1e-14 * G.L) break;
            }
            const std::size_t q = std::size_t(k) * ss + r;
            double xs[2];
            for (int i = 0; i < n; ++i) {
                xs[i] = interp(Xi[i], y);
                P.origin[i][q] = y[i];
                P.dphi[i + 1][q] = xs[i];
            }
            P.phi[q] = phi0.value(y);
            const Point p{t, x[0], x[1]};
            const Mat gi = g.inverse(p);
            P.dphi[0][q] = null_xi0(gi, xs, opt.branch);
            const double Jx = interp(J, y);
            const double fl = sqrtg_xdot0(g, p, xs, opt.branch, n);
            // foot-point flux evaluated at the exact foot point
            double ys[2] = {y[0], y[1]}, gr[2] = {0, 0};
            phi0.gradient(ys, gr);
            const double f0 = sqrtg_xdot0(g, Point{0.0, y[0], y[1]}, gr, opt.branch, n);
            P.transport[q] = std::sqrt(f0 / (fl * Jx));
        }
        P.valid_levels = k + 1;
    }
    return P;
}

Field transport_solve(const PhaseField& P, const std::function<double(const double*)>& a0) {
    if (P.caustic) throw Error("transport_solve: caustic at t = " + std::to_string(P.caustic_time));
    const int n = P.grid.n;
    Field a(P.grid.size());
    for (std::size_t q = 0; q < a.size(); ++q) {
        double y[2] = {0, 0};
        for (int i = 0; i < n; ++i) {
            y[i] = std::fmod(P.origin[i][q], P.grid.L);
            if (y[i] < 0) y[i] += P.grid.L;
        }
        a[q] = a0(y) * P.transport[q];
    }
    return a;
}

Field WkbFamily::field(std::size_t level) const {
    const double e = eps.at(level);
    Field u(a.size());
    for (std::size_t q = 0; q < u.size(); ++q) u[q] = e * a[q] * std::cos(phase->phi[q] / e);
    return u;
}

std::vector<Field> WkbFamily::gradient(std::size_t level) const {
    const double e = eps.at(level);
    const int d = grid().dim();
    std::vector<Field> v(d, Field(a.size()));
    for (std::size_t q = 0; q < a.size(); ++q) {
        const double s = std::sin(phase->phi[q] / e), c = std::cos(phase->phi[q] / e);
        for (int al = 0; al < d; ++al) v[al][q] = -a[q] * s * phase->dphi[al][q] + e * c * da[al][q];
    }
    return v;
}

int required_nx(double L, double eps_min, double P) {
    const double need = L / (eps_min / P);
    int nx = 1;
    while (nx < need * (1.0 - 1e-12)) nx *= 2;
    return nx;
}

WkbFamily sample_family(const PhaseField& phase, const Field& a, const std::vector<double>& eps, double P) {
    const SpacetimeGrid& G = phase.grid;
    if (phase.caustic) throw Error("sample_family: phase has a caustic");
    if (a.size() != G.size()) throw Error("sample_family: amplitude does not live on the phase grid");
    if (eps.empty()) throw Error("sample_family: empty ladder");
    const double emin = *std::min_element(eps.begin(), eps.end());
    if (G.dx() > emin / P * (1.0 + 1e-12))
        throw Error("sample_family: grid under-resolves eps = " + std::to_string(emin) + "; need Nx >= " +
                    std::to_string(required_nx(G.L, emin, P)));
    WkbFamily f;
    f.phase = &phase;
    f.a = a;
    f.eps = eps;
    for (int al = 0; al < G.dim(); ++al) f.da.push_back(d_coord(G, a, al));
    const std::size_t ss = G.slice_size();
    for (std::size_t l = 0; l < eps.size(); ++l) {
        WkbNorms nm;
        const Field u = f.field(l);
        nm.u_over_eps = sup_norm(u) / eps[l];
        const std::vector<Field> v = f.gradient(l);
        for (int al = 0; al < G.dim(); ++al) {
            nm.du = std::max(nm.du, sup_norm(v[al]));
            for (int be = al; be < G.dim(); ++be) {
                const Field h = d_coord(G, v[al], be);
                for (std::size_t q = ss; q + ss < h.size(); ++q)
                    nm.eps_d2u = std::max(nm.eps_d2u, eps[l] * std::abs(h[q]));
            }
        }
        f.norms.push_back(nm);
    }
    return f;
}

DefectMeasureHistogram reference_measure(const WkbFamily& fam, const CellLattice& cells, const DirectionBins& bins) {
    const SpacetimeGrid& G = fam.grid();
    const int d = G.dim();
    DefectMeasureHistogram h(cells, bins, d);
    const double vol = G.dt() * std::pow(G.dx(), G.n);
    std::array<std::pair<int, double>, 4> wp, wm;
    for (std::size_t q = 0; q < G.size(); ++q) {
        const double a2 = fam.a[q] * fam.a[q];
        if (a2 == 0.0) continue;
        const int k = int(q / G.slice_size());
        const double wt = (k == 0 || k == G.Nt) ? 0.5 : 1.0;
        double xi[3], mxi[3], nrm = 0.0;
        for (int al = 0; al < d; ++al) {
            xi[al] = fam.phase->dphi[al][q];
            mxi[al] = -xi[al];
            nrm += xi[al] * xi[al];
        }
        if (nrm == 0.0) throw Error("reference_measure: d phi vanishes on the amplitude support");
        const int np = bins.weights(xi, wp), nm = bins.weights(mxi, wm);
        const Point p = G.point(q);
        for (int c = 0; c < cells.count(); ++c) {
            const double b = cells.window(c, p);
            if (b == 0.0) continue;
            const double base = vol * wt * b * b * a2 * 0.25;
            auto add = [&](int bin, double m) {
                for (int al = 0; al < d; ++al)
                    for (int be = 0; be < d; ++be) h.t(c, bin, al, be) += base * m * xi[al] * xi[be];
            };
            for (int i = 0; i < np; ++i) add(wp[i].first, wp[i].second);
            for (int i = 0; i < nm; ++i) add(wm[i].first, wm[i].second);
        }
    }
    h.derive_scalars();
    return h;
}

void write_manifest(const std::string& path, const WkbFamily& fam, const std::string& phase_dump,
                    const std::string& amplitude_dump, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << header << std::setprecision(12);
    os << "phase = " << phase_dump << "\n";
    os << "amplitude = " << amplitude_dump << "\n";
    os << "levels = " << fam.eps.size() << "\n";
    os << "eikonal_residual = " << fam.phase->max_residual << "\n";
    for (std::size_t l = 0; l < fam.eps.size(); ++l) {
        os << "[level " << l << "]\n";
        os << "eps = " << fam.eps[l] << "\n";
        if (l < fam.norms.size()) {
            os << "u_over_eps = " << fam.norms[l].u_over_eps << "\n";
            os << "du = " << fam.norms[l].du << "\n";
            os << "eps_d2u = " << fam.norms[l].eps_d2u << "\n";
        }
    }
    if (!os) throw Error("write failed: " + path);
}

}  // namespace blab
