#include "rfx/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rfx::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

// Iterative in-place radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse.
void fft_radix2(std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = x[i + k];
        cplx v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Bluestein: length-n DFT as a convolution of chirp-modulated sequences,
// evaluated with a power-of-two FFT.
std::vector<cplx> bluestein(const std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  const std::size_t m = next_pow2(2 * n + 1);
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Angle computed modulo 2n to keep precision at large k.
    const double ang = sign * kPi *
                       static_cast<double>((k * k) % (2 * n)) /
                       static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> a(m, cplx(0.0, 0.0)), b(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  fft_radix2(a, -1);
  fft_radix2(b, -1);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  fft_radix2(a, +1);
  std::vector<cplx> out(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<cplx> fft(std::vector<cplx> x) {
  if (!is_power_of_two(x.size()))
    throw std::invalid_argument("fft: length must be a power of two");
  fft_radix2(x, -1);
  return x;
}

std::vector<cplx> ifft(std::vector<cplx> x) {
  if (!is_power_of_two(x.size()))
    throw std::invalid_argument("ifft: length must be a power of two");
  fft_radix2(x, +1);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= inv_n;
  return x;
}

std::vector<cplx> dft_any(const std::vector<cplx>& x) {
  if (x.empty()) return {};
  if (is_power_of_two(x.size())) return fft(x);
  return bluestein(x, -1);
}

std::vector<cplx> idft_any(const std::vector<cplx>& x) {
  if (x.empty()) return {};
  if (is_power_of_two(x.size())) return ifft(x);
  auto out = bluestein(x, +1);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= inv_n;
  return out;
}

std::vector<double> envelope(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0 || n % 2 != 0)
    throw std::invalid_argument("envelope: even-length input required");
  std::vector<cplx> spec(n);
  for (std::size_t i = 0; i < n; ++i) spec[i] = cplx(x[i], 0.0);
  spec = dft_any(spec);
  // Analytic signal: keep DC and Nyquist, double positive, zero negative.
  for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = cplx(0.0, 0.0);
  spec = idft_any(spec);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(spec[i]);
  return env;
}

}  // namespace rfx::dsp
