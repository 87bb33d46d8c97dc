#include "rfh/fft.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "rfh/threads.hpp"

namespace rfh {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_pow2(cplx* data, std::size_t n, int sign) {
  if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: length not a power of two");
  if (sign != 1 && sign != -1) throw std::invalid_argument("fft: sign must be +-1");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const cplx wstep(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = data[i + j];
        const cplx v = data[i + j + len / 2] * w;
        data[i + j] = u + v;
        data[i + j + len / 2] = u - v;
        w *= wstep;
      }
    }
  }
}

void fft_any(cplx* data, std::size_t n, int sign) {
  if (n == 0) throw std::invalid_argument("fft_any: empty input");
  if (is_pow2(n)) {
    fft_pow2(data, n, sign);
    return;
  }
  // Bluestein: jk = (j^2 + k^2 - (j-k)^2) / 2 turns the DFT into a circular
  // convolution against the conjugate chirp, which we take at a padded
  // power-of-two length.
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<cplx> a(m, cplx(0.0, 0.0));
  std::vector<cplx> b(m, cplx(0.0, 0.0));
  std::vector<cplx> chirp(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint64_t q = (static_cast<std::uint64_t>(j) * j) % two_n;
    const double ang = sign * kPi * static_cast<double>(q) / static_cast<double>(n);
    chirp[j] = cplx(std::cos(ang), std::sin(ang));
    a[j] = data[j] * chirp[j];
    b[j] = std::conj(chirp[j]);
    if (j != 0) b[m - j] = b[j];
  }
  fft_pow2(a.data(), m, -1);
  fft_pow2(b.data(), m, -1);
  for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
  fft_pow2(a.data(), m, 1);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) data[k] = a[k] * inv_m * chirp[k];
}

void fft_nd(cplx* data, int dim, std::size_t n, int sign) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("fft_nd: dim must be 1..3");
  if (!is_pow2(n)) throw std::invalid_argument("fft_nd: n not a power of two");
  std::size_t total = 1;
  for (int t = 0; t < dim; ++t) total *= n;

  std::size_t stride = total / n;  // axis 0 first (row-major outermost)
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t lines = total / n;
    parallel_for(lines, [&](std::size_t line) {
      // Decompose the line index into the portion above and below this axis.
      const std::size_t inner = line % stride;
      const std::size_t outer = line / stride;
      cplx* base = data + outer * stride * n + inner;
      if (stride == 1) {
        fft_pow2(base, n, sign);
      } else {
        std::vector<cplx> buf(n);
        for (std::size_t i = 0; i < n; ++i) buf[i] = base[i * stride];
        fft_pow2(buf.data(), n, sign);
        for (std::size_t i = 0; i < n; ++i) base[i * stride] = buf[i];
      }
    });
    stride /= n;
  }
}

}  // namespace rfh
