#pragma once

#include "qcat/common.hpp"

namespace qcat {

// In-place radix-2 FFT, forward = exp(-2*pi*i*jk/n) convention, no scaling.
// Inverse applies 1/n. Length must be a power of two.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw NumericError("fft_pow2: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = TWO_PI / double(len) * (inverse ? 1.0 : -1.0);
    cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& z : a) z /= double(n);
  }
}

// Row-major rows x cols grid, both powers of two.
inline void fft2_pow2(std::vector<cplx>& g, std::size_t rows, std::size_t cols,
                      bool inverse) {
  if (g.size() != rows * cols) throw NumericError("fft2_pow2: size mismatch");
  std::vector<cplx> buf(std::max(rows, cols));
  for (std::size_t r = 0; r < rows; ++r) {
    buf.assign(g.begin() + r * cols, g.begin() + (r + 1) * cols);
    fft_pow2(buf, inverse);
    std::copy(buf.begin(), buf.end(), g.begin() + r * cols);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    buf.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) buf[r] = g[r * cols + c];
    fft_pow2(buf, inverse);
    for (std::size_t r = 0; r < rows; ++r) g[r * cols + c] = buf[r];
  }
}

}  // namespace qcat
