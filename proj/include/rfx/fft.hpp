#pragma once
// Radix-2 FFT, arbitrary-length DFT via Bluestein's chirp-z, and the
// analytic-signal envelope detector built on top of them.

#include <complex>
#include <vector>

namespace rfx::dsp {

using cplx = std::complex<double>;

// Forward DFT, length must be a power of two. Throws std::invalid_argument
// otherwise. No normalization on the forward path.
std::vector<cplx> fft(std::vector<cplx> x);
// Inverse with 1/N normalization so that ifft(fft(x)) == x.
std::vector<cplx> ifft(std::vector<cplx> x);

// DFT of arbitrary length (Bluestein when n is not a power of two).
std::vector<cplx> dft_any(const std::vector<cplx>& x);
std::vector<cplx> idft_any(const std::vector<cplx>& x);

// |analytic signal| via the frequency-domain Hilbert transform.
// Requires an even-length input.
std::vector<double> envelope(const std::vector<double>& x);

bool is_power_of_two(std::size_t n);

}  // namespace rfx::dsp
