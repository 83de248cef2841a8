#pragma once

#include <complex>
#include <vector>

#include "blab/grid.hpp"

namespace blab {

using cplx = std::complex<double>;
using CField = std::vector<cplx>;

// Thin FFTW wrapper for rank 1..3 complex transforms. Plans are cached per shape
// (FFTW_ESTIMATE, so results do not depend on timing). Not thread safe.
class Fft {
public:
    explicit Fft(std::vector<int> dims);
    void forward(CField& a) const;
    void backward(CField& a) const;  // unnormalised inverse
    void inverse(CField& a) const;   // normalised inverse
    std::size_t size() const { return size_; }
    const std::vector<int>& dims() const { return dims_; }

private:
    std::vector<int> dims_;
    std::size_t size_ = 0;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

// Signed lattice index of FFT position i on an axis of length N.
inline int signed_mode(int i, int N) { return i <= N / 2 ? i : i - N; }

// Periodic box on which a space-time field is Fourier transformed: the first
// Nt time samples of a slab (period T in time) times the spatial torus.
struct FourierBox {
    int n = 1;
    std::vector<int> dims;     // {Nt, Nx[, Nx]}
    std::vector<double> unit;  // angular frequency per lattice step on each axis
    std::size_t size() const;
    // Angular frequency vector and integer lattice index at flat position q.
    void mode(std::size_t q, double* xi, int* k) const;
};

FourierBox spacetime_box(const SpacetimeGrid& g);
FourierBox spatial_box(const SpatialGrid& g);

// Copy the first Nt time samples of a slab field into a complex buffer and back.
CField to_box(const SpacetimeGrid& g, const Field& f);
Field from_box_real(const SpacetimeGrid& g, const CField& c);

}  // namespace blab
