#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sclab {

using cplx = std::complex<double>;

enum class FftDirection { Forward, Backward };

// Unnormalised in-place complex DFT over a row-major array of the given shape
// (rank 1 or 2). Forward uses exp(-2*pi*i*j*k/N). Plans are cached per shape
// and direction; execution is safe from multiple threads.
void fft_inplace(std::span<cplx> data, std::span<const std::size_t> shape, FftDirection dir);

inline void fft_inplace(std::vector<cplx>& data, const std::vector<std::size_t>& shape, FftDirection dir) {
    fft_inplace(std::span<cplx>(data), std::span<const std::size_t>(shape), dir);
}

// Maps FFT-ordered index k in [0, N) to the signed frequency in [-N/2, N/2).
inline long signed_frequency(std::size_t k, std::size_t n) {
    return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

// FFT order <-> centred order (index k + N/2 mod N) for rank 1 or 2 arrays.
std::vector<cplx> fft_to_centered(std::span<const cplx> data, std::span<const std::size_t> shape);
std::vector<cplx> centered_to_fft(std::span<const cplx> data, std::span<const std::size_t> shape);

}  // namespace sclab
