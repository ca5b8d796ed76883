#include "rfx/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rfx::dsp {

namespace {
constexpr double kPi = std::numbers::pi;
}

void StftConfig::validate() const {
  if (hop == 0 || win_len == 0 || n_fft == 0)
    throw std::invalid_argument("stft: zero-sized config field");
  if (!(hop <= win_len && win_len <= n_fft))
    throw std::invalid_argument("stft: need hop <= win_len <= n_fft");
  if (!is_power_of_two(n_fft))
    throw std::invalid_argument("stft: n_fft must be a power of two");
}

std::size_t StftConfig::frames(std::size_t signal_len) const {
  const std::size_t padded = signal_len + (center ? 2 * (win_len / 2) : 0);
  if (padded < win_len) return 0;
  return (padded - win_len) / hop + 1;
}

std::vector<double> StftConfig::window() const {
  std::vector<double> w(win_len);
  for (std::size_t n = 0; n < win_len; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                  static_cast<double>(win_len));
  return w;
}

ComplexSpectrogram stft(const std::vector<double>& signal,
                        const StftConfig& cfg, double fs) {
  cfg.validate();
  const std::size_t pad = cfg.center ? cfg.win_len / 2 : 0;
  const std::size_t t_frames = cfg.frames(signal.size());
  if (t_frames == 0)
    throw std::invalid_argument("stft: signal shorter than one window");
  const auto win = cfg.window();
  const std::size_t n_bins = cfg.bins();

  ComplexSpectrogram out;
  out.n_frames = t_frames;
  out.n_bins = n_bins;
  out.config = cfg;
  out.fs = fs;
  out.data.resize(t_frames * n_bins);

  std::vector<cplx> frame(cfg.n_fft);
  for (std::size_t t = 0; t < t_frames; ++t) {
    for (std::size_t i = 0; i < cfg.n_fft; ++i) frame[i] = cplx(0.0, 0.0);
    for (std::size_t i = 0; i < cfg.win_len; ++i) {
      // Index into the zero-padded signal.
      const std::ptrdiff_t src =
          static_cast<std::ptrdiff_t>(t * cfg.hop + i) -
          static_cast<std::ptrdiff_t>(pad);
      const double s =
          (src >= 0 && src < static_cast<std::ptrdiff_t>(signal.size()))
              ? signal[static_cast<std::size_t>(src)]
              : 0.0;
      frame[i] = cplx(s * win[i], 0.0);
    }
    auto spec = fft(std::move(frame));
    for (std::size_t f = 0; f < n_bins; ++f) out.at(t, f) = spec[f];
    frame = std::move(spec);  // reuse the buffer
  }
  return out;
}

std::vector<double> istft(const ComplexSpectrogram& spec,
                          std::size_t output_len) {
  const auto& cfg = spec.config;
  cfg.validate();
  const auto win = cfg.window();
  const std::size_t pad = cfg.center ? cfg.win_len / 2 : 0;
  const std::size_t padded_len =
      (spec.n_frames - 1) * cfg.hop + cfg.win_len;

  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> norm(padded_len, 0.0);
  std::vector<cplx> full(cfg.n_fft);
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    if (cfg.onesided) {
      for (std::size_t f = 0; f < spec.n_bins; ++f) full[f] = spec.at(t, f);
      for (std::size_t f = spec.n_bins; f < cfg.n_fft; ++f)
        full[f] = std::conj(spec.at(t, cfg.n_fft - f));
    } else {
      for (std::size_t f = 0; f < cfg.n_fft; ++f) full[f] = spec.at(t, f);
    }
    auto frame = ifft(full);
    for (std::size_t i = 0; i < cfg.win_len; ++i) {
      acc[t * cfg.hop + i] += frame[i].real() * win[i];
      norm[t * cfg.hop + i] += win[i] * win[i];
    }
    full = std::move(frame);
  }

  if (output_len + pad > padded_len)
    throw std::invalid_argument("istft: output length exceeds frame coverage");
  std::vector<double> out(output_len);
  for (std::size_t i = 0; i < output_len; ++i) {
    const double d = norm[i + pad];
    if (d < 1e-12)
      throw std::runtime_error("istft: window normalization underflow");
    out[i] = acc[i + pad] / d;
  }
  return out;
}

MagPhaseTensor to_polar(const ComplexSpectrogram& spec) {
  MagPhaseTensor mp;
  mp.n_frames = spec.n_frames;
  mp.n_bins = spec.n_bins;
  mp.mag.resize(spec.data.size());
  mp.phase.resize(spec.data.size());
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    mp.mag[i] = std::abs(spec.data[i]);
    // arg(0) = 0 is the canonical choice for zero entries.
    mp.phase[i] = (mp.mag[i] == 0.0) ? 0.0 : std::arg(spec.data[i]);
  }
  return mp;
}

ComplexSpectrogram from_polar(const MagPhaseTensor& mp, const StftConfig& cfg,
                              double fs) {
  ComplexSpectrogram spec;
  spec.n_frames = mp.n_frames;
  spec.n_bins = mp.n_bins;
  spec.config = cfg;
  spec.fs = fs;
  spec.data.resize(mp.mag.size());
  for (std::size_t i = 0; i < mp.mag.size(); ++i)
    spec.data[i] = std::polar(mp.mag[i], mp.phase[i]);
  return spec;
}

}  // namespace rfx::dsp
