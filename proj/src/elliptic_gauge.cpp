#include "blab/elliptic_gauge.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "blab/fft.hpp"

namespace blab {

GaugeFields GaugeFields::flat(const SpatialGrid& g) {
    GaugeFields f;
    f.grid = g;
    f.N.assign(g.size(), 1.0);
    f.gamma.assign(g.size(), 0.0);
    f.beta.assign(g.n, Field(g.size(), 0.0));
    return f;
}

void GaugeFields::validate() const {
    const std::size_t m = grid.size();
    if (N.size() != m || gamma.size() != m || int(beta.size()) != grid.n)
        throw Error("gauge fields do not match the slice grid");
    for (const Field& b : beta)
        if (b.size() != m) throw Error("gauge fields do not match the slice grid");
    for (std::size_t r = 0; r < m; ++r)
        if (!(N[r] > 0.0)) {
            std::ostringstream os;
            os << "lapse N = " << N[r] << " <= 0 at slice point " << r;
            throw Error(os.str());
        }
}

FormPoint second_form_point(double N, const Mat& db, const Mat& gt, const Mat& e0gt) {
    if (!(N > 0.0)) throw Error("second_form: lapse must be positive");
    const int n = int(gt.rows());
    const Mat gi = gt.inverse();
    double div = 0.0;
    for (int k = 0; k < n; ++k) div += db(k, k);
    FormPoint f;
    f.tau = -((gi.cwiseProduct(e0gt)).sum() - 2.0 * div) / (2.0 * N);
    // H keeps only the shift part: the trace-free part of e_0 gtilde vanishes on conformally flat slices
    f.H = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = -2.0 / n * div * gt(i, j);
            for (int k = 0; k < n; ++k) s += db(j, k) * gt(k, i) + db(i, k) * gt(k, j);
            f.H(i, j) = s / (2.0 * N);
        }
    f.K = f.H + gt * (f.tau / n);
    return f;
}

namespace {

std::vector<Field> gradient(const SpatialGrid& g, const Field& f) {
    std::vector<Field> d;
    for (int i = 1; i <= g.n; ++i) d.push_back(d_slice(g, f, i));
    return d;
}

// db[i][k] = d_i beta^k
std::vector<std::vector<Field>> shift_gradient(const GaugeFields& f) {
    std::vector<std::vector<Field>> db(f.grid.n);
    for (int i = 0; i < f.grid.n; ++i)
        for (int k = 0; k < f.grid.n; ++k) db[i].push_back(d_slice(f.grid, f.beta[k], i + 1));
    return db;
}

double sym_at(const std::vector<Field>& s, int n, int i, int j, std::size_t r) { return s[sym_index(n, i, j)][r]; }

}  // namespace

SecondFundamentalForm second_form(const GaugeFields& f, const std::vector<Field>& e0gt) {
    f.validate();
    const int n = f.grid.n;
    const std::size_t m = f.grid.size();
    if (int(e0gt.size()) != sym_count(n)) throw Error("second_form: need e_0 gtilde_ij for every i <= j");
    const auto db = shift_gradient(f);
    SecondFundamentalForm out;
    out.K.assign(sym_count(n), Field(m));
    out.H.assign(sym_count(n), Field(m));
    out.tau.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double e2 = std::exp(2.0 * f.gamma[r]);
        Mat gt = Mat::Identity(n, n) * e2, e0 = Mat::Zero(n, n), D(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                e0(i, j) = sym_at(e0gt, n, i, j, r);
                D(i, j) = db[i][j][r];
            }
        FormPoint p = second_form_point(f.N[r], D, gt, e0);
        const double tr = (gt.inverse().cwiseProduct(p.H)).sum();
        out.trace_before = std::max(out.trace_before, std::abs(tr));
        p.H -= gt * (tr / n);
        p.K = p.H + gt * (p.tau / n);
        out.tau[r] = p.tau;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                out.H[sym_index(n, i, j)][r] = p.H(i, j);
                out.K[sym_index(n, i, j)][r] = p.K(i, j);
            }
    }
    return out;
}

Christoffel conformal_christoffel(int n, const double* dg) {
    Christoffel G{};
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                G[l][i][j] = (l == i ? dg[j] : 0.0) + (l == j ? dg[i] : 0.0) - (i == j ? dg[l] : 0.0);
    return G;
}

ConformalRicci conformal_ricci(const SpatialGrid& g, const Field& gamma) {
    const int n = g.n;
    const std::size_t m = g.size();
    const Field lap = laplacian_slice(g, gamma);
    const auto dg = gradient(g, gamma);
    ConformalRicci out;
    out.R.assign(sym_count(n), Field(m));
    out.trace.assign(m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Field dij = d2_slice(g, gamma, i + 1, j + 1);
            Field& R = out.R[sym_index(n, i, j)];
            for (std::size_t r = 0; r < m; ++r) {
                double grad2 = 0.0;
                for (int k = 0; k < n; ++k) grad2 += dg[k][r] * dg[k][r];
                const double minus = (i == j ? lap[r] : 0.0) + (n - 2) * dij[r] +
                                     (n - 2) * ((i == j ? grad2 : 0.0) - dg[i][r] * dg[j][r]);
                R[r] = -minus;
            }
        }
    for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += out.R[sym_index(n, i, i)][r];
        out.trace[r] = std::exp(-2.0 * gamma[r]) * s;
    }
    return out;
}

RicciInputs vacuum_inputs(const SpatialGrid& g) {
    RicciInputs in;
    in.R00.assign(g.size(), 0.0);
    in.R0i.assign(g.n, Field(g.size(), 0.0));
    in.trace.assign(g.size(), 0.0);
    return in;
}

double EllipticResiduals::max_abs() const {
    double m = std::max(sup_norm(N), sup_norm(gamma));
    for (const Field& b : beta) m = std::max(m, sup_norm(b));
    return m;
}

std::vector<Field> beta_commutator(const GaugeFields& f) {
    if (f.grid.n != 2) throw Error("beta_commutator: n = 2 only");
    // [D_i, D_k] beta^k = -R~_ik beta^k, and -R~_ik = delta_ik lap gamma when n = 2
    const Field lap = laplacian_slice(f.grid, f.gamma);
    std::vector<Field> out(2, Field(f.grid.size()));
    for (int i = 0; i < 2; ++i)
        for (std::size_t r = 0; r < out[i].size(); ++r) out[i][r] = lap[r] * f.beta[i][r];
    return out;
}

std::vector<Field> beta_commutator_naive(const GaugeFields& f) {
    if (f.grid.n != 2) throw Error("beta_commutator: n = 2 only");
    const SpatialGrid& g = f.grid;
    const std::size_t m = g.size();
    const auto dg = gradient(g, f.gamma);
    const auto db = shift_gradient(f);
    // T[i][k] = D_i beta^k and D_k beta^k
    std::vector<std::vector<Field>> T(2, std::vector<Field>(2, Field(m)));
    Field div(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double d[2] = {dg[0][r], dg[1][r]};
        const Christoffel G = conformal_christoffel(2, d);
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
                double v = db[i][k][r];
                for (int l = 0; l < 2; ++l) v += G[k][i][l] * f.beta[l][r];
                T[i][k][r] = v;
            }
        div[r] = T[0][0][r] + T[1][1][r];
    }
    std::vector<Field> out(2, Field(m, 0.0));
    for (int i = 0; i < 2; ++i) {
        const Field ddiv = d_slice(g, div, i + 1);
        std::vector<Field> dT(2);
        for (int k = 0; k < 2; ++k) dT[k] = d_slice(g, T[i][k], k + 1);
        for (std::size_t r = 0; r < m; ++r) {
            const double d[2] = {dg[0][r], dg[1][r]};
            const Christoffel G = conformal_christoffel(2, d);
            // D_k T_i^k = d_k T_i^k + Gamma^k_kl T_i^l - Gamma^l_ki T_l^k
            double DT = 0.0;
            for (int k = 0; k < 2; ++k) {
                DT += dT[k][r];
                for (int l = 0; l < 2; ++l) DT += G[k][k][l] * T[i][l][r] - G[l][k][i] * T[l][k][r];
            }
            out[i][r] = ddiv[r] - DT;
        }
    }
    return out;
}

EllipticResiduals elliptic_residuals(const GaugeFields& f, const SecondFundamentalForm& K, const RicciInputs& in) {
    f.validate();
    const SpatialGrid& g = f.grid;
    if (g.n != 2) throw Error("elliptic_residuals: n = 2 only");
    const int n = 2;
    const std::size_t m = g.size();
    const auto dg = gradient(g, f.gamma);
    const auto dN = gradient(g, f.N);
    const std::vector<Field> comm = beta_commutator(f);
    EllipticResiduals res;

    // beta: D^j D_j beta_i with S_ji = D_j beta_i, beta_i = e^{2 gamma} beta^i
    std::vector<Field> low(n, Field(m));
    for (int i = 0; i < n; ++i)
        for (std::size_t r = 0; r < m; ++r) low[i][r] = std::exp(2.0 * f.gamma[r]) * f.beta[i][r];
    std::vector<std::vector<Field>> S(n), dS(n);  // S[j][i], dS[j][i] = d_j S_ji
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            Field d = d_slice(g, low[i], j + 1);
            for (std::size_t r = 0; r < m; ++r) {
                const double dd[2] = {dg[0][r], dg[1][r]};
                const Christoffel G = conformal_christoffel(n, dd);
                for (int l = 0; l < n; ++l) d[r] -= G[l][j][i] * low[l][r];
            }
            S[j].push_back(std::move(d));
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) dS[j].push_back(d_slice(g, S[j][i], j + 1));
    res.beta.assign(n, Field(m));
    for (std::size_t r = 0; r < m; ++r) {
        const double d[2] = {dg[0][r], dg[1][r]};
        const Christoffel G = conformal_christoffel(n, d);
        const double ei = std::exp(-2.0 * f.gamma[r]);
        for (int i = 0; i < n; ++i) {
            double lhs = 0.0;
            for (int j = 0; j < n; ++j) {
                lhs += dS[j][i][r];
                for (int l = 0; l < n; ++l) lhs -= G[l][j][j] * S[l][i][r] + G[l][j][i] * S[j][l][r];
            }
            lhs *= ei;
            double NH = 0.0;
            for (int k = 0; k < n; ++k) NH += ei * dN[k][r] * sym_at(K.H, n, i, k, r);
            const double rhs = -2.0 * in.R0i[i][r] + 2.0 * NH + comm[i][r];  // d_i tau = 0 for constant tau
            res.beta[i][r] = lhs - rhs;
        }
    }

    // N: (1/sqrt g~) d_i(sqrt g~ g~^{ij} d_j N), sqrt g~ g~^{ij} = e^{(n-2) gamma} delta^{ij}
    Field lapN(m, 0.0);
    for (int i = 0; i < n; ++i) {
        Field flux(m);
        for (std::size_t r = 0; r < m; ++r) flux[r] = std::exp((n - 2) * f.gamma[r]) * dN[i][r];
        const Field dv = d_slice(g, flux, i + 1);
        for (std::size_t r = 0; r < m; ++r) lapN[r] += dv[r];
    }
    const ConformalRicci cr = conformal_ricci(g, f.gamma);
    res.N.assign(m, 0.0);
    res.gamma.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double e2 = std::exp(2.0 * f.gamma[r]);
        lapN[r] /= std::exp(n * f.gamma[r]);
        double H2 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H2 += std::pow(sym_at(K.H, n, i, j, r), 2);
        H2 /= e2 * e2;
        const double e0tau = in.e0tau.empty() ? 0.0 : in.e0tau[r];
        const double N = f.N[r];
        res.N[r] = lapN[r] - (in.R00[r] / N + N * H2 - e0tau + N * f.tau * f.tau / n);
        const double g00 = -N * N;  // g(e_0, e_0)
        res.gamma[r] = cr.trace[r] - (2.0 / (N * N) * (in.R00[r] - 0.5 * g00 * in.trace[r]) + H2 +
                                      f.tau * f.tau * (1.0 - 1.0 / n));
    }
    return res;
}

std::vector<Field> spatial_ricci(const GaugeFields& f, const SecondFundamentalForm& K, const std::vector<Field>& e0H,
                                 const Field& e0tau) {
    f.validate();
    const SpatialGrid& g = f.grid;
    const int n = g.n;
    const std::size_t m = g.size();
    const auto dg = gradient(g, f.gamma);
    const auto dN = gradient(g, f.N);
    const auto db = shift_gradient(f);
    const ConformalRicci cr = conformal_ricci(g, f.gamma);
    std::vector<Field> R(sym_count(n), Field(m));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Field ddN = d2_slice(g, f.N, i + 1, j + 1);
            const int s = sym_index(n, i, j);
            for (std::size_t r = 0; r < m; ++r) {
                const double d[2] = {dg[0][r], n == 2 ? dg[1][r] : 0.0};
                const Christoffel G = conformal_christoffel(n, d);
                const double e2 = std::exp(2.0 * f.gamma[r]);
                double DdN = ddN[r];
                for (int k = 0; k < n; ++k) DdN -= G[k][i][j] * dN[k][r];
                double lie = 0.0, HH = 0.0;
                for (int k = 0; k < n; ++k) {
                    lie += db[j][k][r] * sym_at(K.H, n, i, k, r) + db[i][k][r] * sym_at(K.H, n, j, k, r);
                    HH += sym_at(K.H, n, i, k, r) * sym_at(K.H, n, j, k, r) / e2;
                }
                const double e0t = e0tau.empty() ? 0.0 : e0tau[r];
                const double e0h = e0H.empty() ? 0.0 : e0H[s][r];
                R[s][r] = cr.R[s][r] - (DdN + e0h - lie) / f.N[r] - 2.0 * HH +
                          (K.K[s][r] - 2.0 / n * K.H[s][r]) * f.tau - (i == j ? e2 : 0.0) * e0t / (n * f.N[r]);
            }
        }
    return R;
}

Mat u1_metric(const Mat& g3, double psi, const Vec& A) {
    const int d = int(g3.rows());
    Mat g(d + 1, d + 1);
    const double em = std::exp(-2.0 * psi), ep = std::exp(2.0 * psi);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) g(a, b) = em * g3(a, b) + ep * A[a] * A[b];
        g(a, d) = g(d, a) = ep * A[a];
    }
    g(d, d) = ep;
    return g;
}

U1Split u1_split(const Mat& g4) {
    const int d = int(g4.rows()) - 1;
    U1Split s;
    const double ep = g4(d, d);
    if (!(ep > 0.0)) throw Error("u1_split: the symmetry direction must be spacelike");
    s.psi = 0.5 * std::log(ep);
    s.A = Vec(d);
    for (int a = 0; a < d; ++a) s.A[a] = g4(a, d) / ep;
    s.g = Mat(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) s.g(a, b) = ep * (g4(a, b) - g4(a, d) * g4(b, d) / ep);
    return s;
}

std::vector<Field> u1_assemble(const MetricField& g, const Field& psi, const std::vector<Field>& A) {
    const SpacetimeGrid& G = g.grid();
    const int d = G.dim();
    if (int(A.size()) != d) throw Error("u1_assemble: A needs one component per base coordinate");
    std::vector<Field> out(sym_count(d + 1), Field(G.size()));
    for (std::size_t q = 0; q < G.size(); ++q) {
        Vec a(d);
        for (int k = 0; k < d; ++k) a[k] = A[k][q];
        const Mat m = u1_metric(g.lower_at(q), psi[q], a);
        for (int i = 0; i <= d; ++i)
            for (int j = i; j <= d; ++j) out[sym_index(d + 1, i, j)][q] = m(i, j);
    }
    return out;
}

namespace {

// Levels 0, 1, Nt - 1, Nt are skipped: nested stencils there reach one-sided end derivatives.
double interior_l2(const SpacetimeGrid& G, const Field& f) {
    Field a(f.size(), 0.0);
    const std::size_t ss = G.slice_size();
    for (int k = 2; k < G.Nt - 1; ++k)
        for (std::size_t r = 0; r < ss; ++r) a[k * ss + r] = f[k * ss + r] * f[k * ss + r];
    return std::sqrt(integrate(G, a));
}

TwistForm twist_core(const MetricField& g, const Field& psi, const std::vector<Field>& dw) {
    const SpacetimeGrid& G = g.grid();
    if (G.n != 2) throw Error("twist_form: n = 2 only");
    const std::size_t M = G.size();
    TwistForm t;
    t.F.assign(3, Field(M));
    for (std::size_t q = 0; q < M; ++q) {
        const double f = std::exp(-4.0 * psi[q]) * g.sqrtdet()[q];
        double up[3];
        for (int l = 0; l < 3; ++l) {
            up[l] = 0.0;
            for (int r = 0; r < 3; ++r) up[l] += g.ginv(l, r)[q] * dw[r][q];
        }
        // F_{mu nu} = f eps_{mu nu l} (d omega)^l
        t.F[0][q] = f * up[2];
        t.F[1][q] = -f * up[1];
        t.F[2][q] = f * up[0];
    }
    const Field a = d_coord(G, t.F[2], 0), b = d_coord(G, t.F[1], 1), c = d_coord(G, t.F[0], 2);
    t.dF.assign(M, 0.0);
    for (std::size_t q = 0; q < M; ++q) t.dF[q] = a[q] - b[q] + c[q];
    t.dF_norm = interior_l2(G, t.dF);
    return t;
}

}  // namespace

TwistForm twist_form(const MetricField& g, const Field& psi, const Field& omega) {
    const SpacetimeGrid& G = g.grid();
    std::vector<Field> dw, dp;
    for (int a = 0; a < G.dim(); ++a) {
        dw.push_back(d_coord(G, omega, a));
        dp.push_back(d_coord(G, psi, a));
    }
    TwistForm t = twist_core(g, psi, dw);
    // box omega = g^{ab} d_a d_b omega + (1 / sqrt g) d_a(sqrt g g^{ab}) d_b omega with nested
    // central differences: a leapfrog history holds two interleaved time chains offset
    // at O(dt^3), which a compact three-point stencil would amplify to O(dt)
    const int d = G.dim();
    Field box(G.size(), 0.0);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const Field dd = d_coord(G, dw[b], a);
            Field w(G.size());
            for (std::size_t q = 0; q < G.size(); ++q) w[q] = g.sqrtdet()[q] * g.ginv(a, b)[q];
            const Field dw_ab = d_coord(G, w, a);
            for (std::size_t q = 0; q < G.size(); ++q)
                box[q] += g.ginv(a, b)[q] * dd[q] + dw_ab[q] / g.sqrtdet()[q] * dw[b][q];
        }
    t.wave.assign(G.size(), 0.0);
    for (std::size_t q = 0; q < G.size(); ++q) {
        double pw = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) pw += g.ginv(a, b)[q] * dp[a][q] * dw[b][q];
        t.wave[q] = g.sqrtdet()[q] * std::exp(-4.0 * psi[q]) * (box[q] - 4.0 * pw);
    }
    t.wave_norm = interior_l2(G, t.wave);
    return t;
}

TwistForm twist_form_gradient(const MetricField& g, const Field& psi, const std::vector<Field>& domega) {
    if (int(domega.size()) != g.grid().dim()) throw Error("twist_form: gradient needs 3 components");
    return twist_core(g, psi, domega);
}

namespace {

// Multiply the spatial spectrum by s(|k|^2, k) and transform back.
Field spectral_apply(const SpatialGrid& g, const Field& f, const std::function<double(double)>& s) {
    const FourierBox box = spatial_box(g);
    const Fft fft(box.dims);
    CField c(f.begin(), f.end());
    fft.forward(c);
    double xi[3];
    int k[3];
    for (std::size_t q = 0; q < c.size(); ++q) {
        box.mode(q, xi, k);
        double k2 = 0.0;
        for (int a = 0; a < g.n; ++a) k2 += xi[a] * xi[a];
        c[q] *= s(k2);
    }
    fft.inverse(c);
    Field out(f.size());
    for (std::size_t q = 0; q < c.size(); ++q) out[q] = c[q].real();
    return out;
}

}  // namespace

Field spectral_laplacian(const SpatialGrid& g, const Field& f) {
    return spectral_apply(g, f, [](double k2) { return -k2; });
}

Field poisson_solve(const SpatialGrid& g, const Field& rhs) {
    if (rhs.size() != g.size()) throw Error("poisson_solve: rhs does not match the grid");
    double mean = 0.0;
    for (double v : rhs) mean += v;
    mean /= double(rhs.size());
    const double scale = std::max(sup_norm(rhs), 1e-300);
    if (std::abs(mean) > 1e-12 * scale) {
        std::ostringstream os;
        os << "poisson_solve: rhs has nonzero mean " << mean << " (not solvable on the torus)";
        throw Error(os.str());
    }
    return spectral_apply(g, rhs, [](double k2) { return k2 > 0.0 ? -1.0 / k2 : 0.0; });
}

std::vector<Field> slice_ricci(const GaugeFields& f) {
    f.validate();
    const SpatialGrid& g = f.grid;
    const int n = g.n;
    const std::size_t m = g.size();
    for (const Field& b : f.beta)
        if (sup_norm(b) != 0.0) throw Error("slice_ricci: static data with beta = 0 only");
    // R_00 = N lap_g~ N from the lapse equation with H = 0, tau = 0
    SecondFundamentalForm K;
    K.K.assign(sym_count(n), Field(m, 0.0));
    K.H = K.K;
    K.tau.assign(m, 0.0);
    EllipticResiduals res = elliptic_residuals(f, K, vacuum_inputs(g));
    std::vector<Field> out;
    Field R00(m);
    for (std::size_t r = 0; r < m; ++r) R00[r] = f.N[r] * res.N[r];
    out.push_back(R00);
    for (Field& R : spatial_ricci(f, K, {}, {})) out.push_back(std::move(R));
    return out;
}

std::vector<Field> default_slice_tests(const SpatialGrid& g) {
    std::vector<Field> out;
    const double L = g.L;
    auto pb = [L](double x, double c, double r) { return bump(x - c - L * std::round((x - c) / L), 0.0, r); };
    for (int j = 0; j < 8; ++j) {
        const double cx = L * (j + 0.5) / 8.0, cy = L * ((j * 3) % 8 + 0.5) / 8.0;
        const double rx = L * (0.15 + 0.15 * ((j * 5) % 8) / 7.0), ry = L * (0.2 + 0.1 * (j % 3) / 2.0);
        Field f(g.size());
        for (int i = 0; i < g.Nx; ++i) {
            if (g.n == 1) {
                f[g.idx(i)] = pb(g.x(i), cx, rx);
                continue;
            }
            for (int k = 0; k < g.Nx; ++k) f[g.idx(i, k)] = pb(g.x(i), cx, rx) * pb(g.x(k), cy, ry);
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

double slice_lp(const SpatialGrid& g, const Field& f, double p) {
    Field a(f.size());
    for (std::size_t r = 0; r < f.size(); ++r) a[r] = std::pow(std::abs(f[r]), p);
    return std::pow(integrate(g, a), 1.0 / p);
}

// g^{00} = -N^{-2}, g^{11} = e^{-2 gamma} for static conformally flat data
std::vector<Field> static_inverse(const GaugeFields& f) {
    Field a(f.N.size()), b(f.N.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
        a[r] = -1.0 / (f.N[r] * f.N[r]);
        b[r] = std::exp(-2.0 * f.gamma[r]);
    }
    return {a, b};
}

}  // namespace

RicciDiag ricci_convergence_diag(const GaugeLadder& ladder, const std::vector<Field>& tests) {
    const std::size_t Lv = ladder.eps.size();
    if (Lv < 3) throw Error("ricci_convergence_diag: ladder shorter than 3 levels");
    const SpatialGrid& g = ladder.limit.grid;
    const std::vector<Field> Rlim = slice_ricci(ladder.limit);
    const std::vector<Field> ginv = static_inverse(ladder.limit);
    RicciDiag d;
    d.probe_dev.assign(Rlim.size(), {});
    std::vector<std::vector<Field>> Rlev;
    for (std::size_t l = 0; l < Lv; ++l) {
        const GaugeFields f = ladder.level(l);
        const std::vector<Field> gi = static_inverse(f);
        double lap = 0.0, grad = 0.0;
        for (std::size_t c = 0; c < gi.size(); ++c) {
            lap = std::max(lap, slice_lp(g, laplacian_slice(g, gi[c]), 2.0));
            Field diff(gi[c].size());
            for (std::size_t r = 0; r < diff.size(); ++r) diff[r] = gi[c][r] - ginv[c][r];
            for (int j = 1; j <= g.n; ++j) grad = std::max(grad, slice_lp(g, d_slice(g, diff, j), 4.0));
        }
        d.lap_l2.push_back(lap);
        d.grad_l4.push_back(grad);
        Rlev.push_back(slice_ricci(f));
    }
    d.lap_fit = fit_loglog(ladder.eps, d.lap_l2);
    d.lap_bounded = d.lap_fit.slope > -0.25;
    d.grad_fit = fit_loglog(ladder.eps, d.grad_l4);
    d.limit_dev.assign(Rlim.size(), 0.0);
    for (std::size_t c = 0; c < Rlim.size(); ++c) {
        std::vector<double> scale(tests.size());
        for (std::size_t j = 0; j < tests.size(); ++j) {
            Field a(g.size());
            for (std::size_t r = 0; r < a.size(); ++r) a[r] = std::abs(tests[j][r] * Rlev.back()[c][r]);
            scale[j] = integrate(g, a);
            if (scale[j] == 0.0) {
                for (std::size_t r = 0; r < a.size(); ++r) a[r] = std::abs(tests[j][r]);
                scale[j] = integrate(g, a);
            }
        }
        for (std::size_t l = 0; l < Lv; ++l) {
            double m = 0.0;
            for (std::size_t j = 0; j < tests.size(); ++j) {
                Field a(g.size());
                for (std::size_t r = 0; r < a.size(); ++r) a[r] = (Rlev[l][c][r] - Rlim[c][r]) * tests[j][r];
                m = std::max(m, std::abs(integrate(g, a)) / scale[j]);
            }
            d.probe_dev[c].push_back(m);
        }
        d.limit_dev[c] = d.probe_dev[c].back();
    }
    return d;
}

InterpolationCheck interpolation_check(const SpatialGrid& g, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> kmax(1, std::max(1, g.Nx / 4));
    std::uniform_real_distribution<double> decay(0.0, 2.0);
    InterpolationCheck out;
    for (int c = 0; c < count; ++c) {
        const int K = kmax(rng);
        const double s = decay(rng);
        // random real band-limited field: sum of modes with |k_i| <= K
        Field f(g.size(), 0.0);
        const int K2 = g.n == 2 ? K : 0;
        for (int k1 = -K; k1 <= K; ++k1)
            for (int k2 = -K2; k2 <= K2; ++k2) {
                const double amp = nd(rng) / std::pow(1.0 + k1 * k1 + k2 * k2, s), ph = kTwoPi * (nd(rng));
                const double w = kTwoPi / g.L;
                for (int i = 0; i < g.Nx; ++i) {
                    if (g.n == 1) {
                        f[g.idx(i)] += amp * std::cos(w * k1 * g.x(i) + ph);
                        continue;
                    }
                    for (int j = 0; j < g.Nx; ++j) f[g.idx(i, j)] += amp * std::cos(w * (k1 * g.x(i) + k2 * g.x(j)) + ph);
                }
            }
        const Field lap = spectral_laplacian(g, f);
        // ||grad f||^2 = -<f, lap f> on the torus
        double gg = 0.0;
        for (std::size_t r = 0; r < f.size(); ++r) gg -= f[r] * lap[r];
        gg *= std::pow(g.dx(), g.n);
        const double nf = slice_lp(g, f, 2.0), nl = slice_lp(g, lap, 2.0);
        const double ratio = std::sqrt(std::max(gg, 0.0)) / (std::sqrt(nl * nf) + nf);
        out.ratio.push_back(ratio);
        out.C = std::max(out.C, ratio);
    }
    return out;
}

}  // namespace blab
