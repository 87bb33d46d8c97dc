#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rfh {

using cplx = std::complex<double>;

bool is_pow2(std::size_t n);

// Unnormalized in-place transform, sum_j x_j e^{sign 2 pi i jk / n}.
// sign = -1 is the analysis direction, +1 the synthesis direction; callers
// own the normalization. Length must be a power of two.
void fft_pow2(cplx* data, std::size_t n, int sign);

// Same contract for arbitrary n (Bluestein chirp-z when n is not a power of
// two). Cost stays O(n log n).
void fft_any(cplx* data, std::size_t n, int sign);

// d-dimensional unnormalized transform of a row-major n^d cube, n a power of
// two. Lines along each axis are transformed independently (threaded).
void fft_nd(cplx* data, int dim, std::size_t n, int sign);

}  // namespace rfh
