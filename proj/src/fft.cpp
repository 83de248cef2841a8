#include "blab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace blab {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW planning is not thread safe; execution on distinct arrays is.
struct PlanCache {
    std::mutex lock;
    std::map<std::vector<int>, PlanPair> plans;
    ~PlanCache() {
        for (auto& [k, p] : plans) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.bwd);
        }
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

Fft::Fft(std::vector<int> dims) : dims_(std::move(dims)) {
    size_ = 1;
    for (int d : dims_) size_ *= std::size_t(d);
    std::lock_guard<std::mutex> guard(cache().lock);
    auto& plans = cache().plans;
    auto it = plans.find(dims_);
    if (it == plans.end()) {
        std::vector<fftw_complex> scratch(size_);
        PlanPair p;
        p.fwd = fftw_plan_dft(int(dims_.size()), dims_.data(), scratch.data(), scratch.data(), FFTW_FORWARD,
                              FFTW_ESTIMATE);
        p.bwd = fftw_plan_dft(int(dims_.size()), dims_.data(), scratch.data(), scratch.data(), FFTW_BACKWARD,
                              FFTW_ESTIMATE);
        if (!p.fwd || !p.bwd) throw Error("FFTW plan creation failed");
        it = plans.emplace(dims_, p).first;
    }
    fwd_ = it->second.fwd;
    bwd_ = it->second.bwd;
}

void Fft::forward(CField& a) const {
    if (a.size() != size_) throw Error("FFT size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(static_cast<fftw_plan>(fwd_), p, p);
}

void Fft::backward(CField& a) const {
    if (a.size() != size_) throw Error("FFT size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(static_cast<fftw_plan>(bwd_), p, p);
}

void Fft::inverse(CField& a) const {
    backward(a);
    const double s = 1.0 / double(size_);
    for (auto& z : a) z *= s;
}

std::size_t FourierBox::size() const {
    std::size_t s = 1;
    for (int d : dims) s *= std::size_t(d);
    return s;
}

void FourierBox::mode(std::size_t q, double* xi, int* k) const {
    const int r = int(dims.size());
    for (int a = r - 1; a >= 0; --a) {
        const int i = int(q % std::size_t(dims[a]));
        q /= std::size_t(dims[a]);
        const int m = signed_mode(i, dims[a]);
        if (k) k[a] = m;
        if (xi) xi[a] = m * unit[a];
    }
}

FourierBox spacetime_box(const SpacetimeGrid& g) {
    FourierBox b;
    b.n = g.n;
    b.dims.push_back(g.Nt);
    b.unit.push_back(kTwoPi / g.T);
    for (int i = 0; i < g.n; ++i) {
        b.dims.push_back(g.Nx);
        b.unit.push_back(kTwoPi / g.L);
    }
    return b;
}

FourierBox spatial_box(const SpatialGrid& g) {
    FourierBox b;
    b.n = g.n;
    for (int i = 0; i < g.n; ++i) {
        b.dims.push_back(g.Nx);
        b.unit.push_back(kTwoPi / g.L);
    }
    return b;
}

CField to_box(const SpacetimeGrid& g, const Field& f) {
    const std::size_t m = std::size_t(g.Nt) * g.slice_size();
    CField c(m);
    for (std::size_t q = 0; q < m; ++q) c[q] = f[q];
    return c;
}

Field from_box_real(const SpacetimeGrid& g, const CField& c) {
    Field f(g.size(), 0.0);
    const std::size_t m = std::size_t(g.Nt) * g.slice_size();
    for (std::size_t q = 0; q < m; ++q) f[q] = c[q].real();
    // Last time sample is the periodic image of the first.
    const std::size_t ss = g.slice_size();
    for (std::size_t r = 0; r < ss; ++r) f[m + r] = f[r];
    return f;
}

}  // namespace blab
