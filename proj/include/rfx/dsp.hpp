#pragma once
// STFT / inverse STFT with the fixed analysis configuration used throughout
// the pipeline (n_fft 512, Hamming window 64, hop 32, centered, onesided),
// plus the polar <-> complex spectrogram conversions.

#include <complex>
#include <cstddef>
#include <vector>

#include "rfx/fft.hpp"

namespace rfx::dsp {

struct StftConfig {
  std::size_t n_fft = 512;
  std::size_t win_len = 64;
  std::size_t hop = 32;
  bool center = true;     // zero-pad win_len/2 on both sides
  bool onesided = true;   // keep n_fft/2 + 1 bins

  std::size_t bins() const { return onesided ? n_fft / 2 + 1 : n_fft; }
  std::size_t frames(std::size_t signal_len) const;
  // Periodic Hamming coefficients, 0.54 - 0.46*cos(2*pi*n/w).
  std::vector<double> window() const;
  void validate() const;  // throws std::invalid_argument on bad fields
};

struct ComplexSpectrogram {
  std::vector<cplx> data;  // row-major, frames x bins
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  StftConfig config;
  double fs = 0.0;

  cplx& at(std::size_t t, std::size_t f) { return data[t * n_bins + f]; }
  const cplx& at(std::size_t t, std::size_t f) const {
    return data[t * n_bins + f];
  }
};

struct MagPhaseTensor {
  std::vector<double> mag;    // frames x bins, >= 0
  std::vector<double> phase;  // frames x bins, wrapped to (-pi, pi]
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
};

ComplexSpectrogram stft(const std::vector<double>& signal,
                        const StftConfig& cfg, double fs);
// WOLA inverse, synthesis window = analysis window, squared-window
// normalization. output_len is the original signal length.
std::vector<double> istft(const ComplexSpectrogram& spec,
                          std::size_t output_len);

MagPhaseTensor to_polar(const ComplexSpectrogram& spec);
ComplexSpectrogram from_polar(const MagPhaseTensor& mp, const StftConfig& cfg,
                              double fs);

}  // namespace rfx::dsp
