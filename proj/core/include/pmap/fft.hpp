#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace pmap {

// In-place iterative radix-2 FFT. Size must be a power of two. The inverse
// transform includes the 1/n scaling.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

}  // namespace pmap
