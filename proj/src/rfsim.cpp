#include "rfx/rfsim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rfx/fft.hpp"

namespace rfx::sim {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Continuous-duration Hann pulse: envelope 0.5*(1 - cos(2*pi*t/T)) on [0,T],
// carrier cosine phased so the pulse is symmetric about its center.
std::vector<double> hann_pulse(double duration_s, double fc, double fs) {
  const auto n = static_cast<std::size_t>(std::floor(duration_s * fs)) + 1;
  std::vector<double> p(std::max<std::size_t>(n, 3));
  const double t_mid = duration_s / 2.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    const double env =
        (t <= duration_s) ? 0.5 * (1.0 - std::cos(2.0 * kPi * t / duration_s))
                          : 0.0;
    p[i] = env * std::cos(2.0 * kPi * fc * (t - t_mid));
  }
  return p;
}

}  // namespace

void ProbeSpec::validate() const {
  if (fc <= 0.0 || fs <= 0.0)
    throw std::invalid_argument("probe: fc and fs must be positive");
  if (!(frac_bw_probe > 0.0 && frac_bw_probe < 2.0))
    throw std::invalid_argument("probe: frac_bw_probe must lie in (0, 2)");
  if (fs <= 2.0 * fc * (1.0 + frac_bw_probe / 2.0))
    throw std::invalid_argument("probe: -6 dB band does not fit below Nyquist");
  if (impulse_cycles <= 0.0)
    throw std::invalid_argument("probe: impulse_cycles must be positive");
}

void ExcitationSpec::validate() const {
  if (fc <= 0.0) throw std::invalid_argument("excitation: fc must be positive");
  if (!(target_frac_bw > 0.0 && target_frac_bw < 2.0))
    throw std::invalid_argument("excitation: target_frac_bw out of range");
}

double measure_frac_bw(const std::vector<double>& pulse, double fs,
                       double fc) {
  if (pulse.empty()) throw std::invalid_argument("measure_frac_bw: empty");
  const std::size_t n = std::max<std::size_t>(next_pow2(8 * pulse.size()),
                                              1 << 14);
  std::vector<dsp::cplx> buf(n, dsp::cplx(0.0, 0.0));
  for (std::size_t i = 0; i < pulse.size(); ++i) buf[i] = pulse[i];
  auto spec = dsp::fft(std::move(buf));

  const std::size_t half = n / 2;
  std::vector<double> mag(half + 1);
  for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);
  const std::size_t peak =
      static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) -
                               mag.begin());
  const double level = mag[peak] / 2.0;  // -6 dB on the amplitude spectrum
  const double df = fs / static_cast<double>(n);

  // Walk outward from the peak to the half-amplitude crossings.
  double f_lo = -1.0, f_hi = -1.0;
  for (std::size_t k = peak; k-- > 0;) {
    if (mag[k] < level) {
      const double frac = (mag[k + 1] - level) / (mag[k + 1] - mag[k]);
      f_lo = (static_cast<double>(k + 1) - frac) * df;
      break;
    }
  }
  for (std::size_t k = peak + 1; k <= half; ++k) {
    if (mag[k] < level) {
      const double frac = (mag[k - 1] - level) / (mag[k - 1] - mag[k]);
      f_hi = (static_cast<double>(k - 1) + frac) * df;
      break;
    }
  }
  if (f_lo < 0.0 || f_hi < 0.0)
    throw std::runtime_error("measure_frac_bw: -6 dB crossing not found");
  return (f_hi - f_lo) / fc;
}

std::vector<double> synth_probe_impulse(const ProbeSpec& probe, double fs) {
  probe.validate();
  const double tol = 0.02;
  // Bandwidth shrinks monotonically with window duration; bracket then bisect.
  double t_lo = 0.5 / probe.fc;                 // widest band
  double t_hi = probe.impulse_cycles / probe.fc;  // narrowest band
  auto bw_at = [&](double dur) {
    // Very short windows can push a -6 dB edge past DC or Nyquist; for
    // bracketing that simply means "wider than anything we want".
    try {
      return measure_frac_bw(hann_pulse(dur, probe.fc, fs), fs, probe.fc);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  if (bw_at(t_lo) < probe.frac_bw_probe)
    throw std::runtime_error(
        "synth_probe_impulse: requested bandwidth unattainable");
  if (bw_at(t_hi) > probe.frac_bw_probe)
    t_hi = 4.0 * probe.impulse_cycles / probe.fc;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    const double bw = bw_at(mid);
    if (std::abs(bw - probe.frac_bw_probe) / probe.frac_bw_probe <= tol)
      return hann_pulse(mid, probe.fc, fs);
    if (bw > probe.frac_bw_probe)
      t_lo = mid;
    else
      t_hi = mid;
  }
  throw std::runtime_error("synth_probe_impulse: bisection did not converge");
}

double sigma_from_frac_bw(double target_frac_bw, double fc) {
  // Gaussian envelope exp(-t^2 / (2 sigma^2)) has amplitude spectrum
  // exp(-(2 pi f sigma)^2 / 2); its -6 dB half-width is sqrt(2 ln 2)/(2 pi
  // sigma). Solve for sigma with half-width = target_frac_bw * fc / 2.
  const double half_width_hz = target_frac_bw * fc / 2.0;
  return std::sqrt(2.0 * std::log(2.0)) / (2.0 * kPi * half_width_hz);
}

namespace {

std::vector<double> gaussian_pulse(double sigma, double fc, double fs) {
  // The -6 dB half-width of the Gaussian amplitude spectrum; the upper band
  // edge must sit below Nyquist or the tail aliases back into the band.
  const double sigma_f = 1.0 / (2.0 * kPi * sigma);
  const double half_width_hz = std::sqrt(2.0 * std::log(2.0)) * sigma_f;
  if (fc + half_width_hz >= fs / 2.0)
    throw std::invalid_argument("synth_excitation: spectrum would alias");

  const auto half_n = static_cast<std::size_t>(std::floor(4.0 * sigma * fs));
  const std::size_t n = 2 * half_n + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t =
        (static_cast<double>(i) - static_cast<double>(half_n)) / fs;
    g[i] = std::exp(-t * t / (2.0 * sigma * sigma)) *
           std::cos(2.0 * kPi * fc * t);
  }
  return g;
}

}  // namespace

std::vector<double> synth_excitation(const ExcitationSpec& spec, double fs) {
  spec.validate();
  if (spec.sigma_t > 0.0) return gaussian_pulse(spec.sigma_t, spec.fc, fs);

  // The analytic sigma is only exact for the infinite continuous pulse; the
  // negative-frequency image and the tail folded at Nyquist both broaden the
  // measured band. Refine sigma by bisection on the measured width
  // (monotonically decreasing in sigma) so the sampled pulse itself meets
  // the target.
  const double sigma0 = sigma_from_frac_bw(spec.target_frac_bw, spec.fc);
  auto bw_at = [&](double s) {
    return measure_frac_bw(gaussian_pulse(s, spec.fc, fs), fs, spec.fc);
  };
  double s_lo = sigma0, s_hi = 2.0 * sigma0;  // [wider, narrower] band
  if (bw_at(s_lo) < spec.target_frac_bw) s_lo = 0.5 * sigma0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (s_lo + s_hi);
    const double bw = bw_at(mid);
    if (std::abs(bw - spec.target_frac_bw) / spec.target_frac_bw <= 5e-3)
      return gaussian_pulse(mid, spec.fc, fs);
    if (bw > spec.target_frac_bw)
      s_lo = mid;
    else
      s_hi = mid;
  }
  throw std::runtime_error("synth_excitation: bisection did not converge");
}

PhantomSpec generate_phantom(PhantomKind kind, const PhantomParams& params,
                             std::uint64_t rng_seed) {
  PhantomSpec ph;
  ph.kind = kind;
  ph.rng_seed = rng_seed;
  ph.depth_min_m = params.depth_min_m;
  ph.depth_max_m = params.depth_max_m;
  ph.lateral_extent_m = params.lateral_extent_m;

  if (kind == PhantomKind::point_targets) {
    // Isolated unit scatterers at distinct increasing depths, one per row.
    const std::size_t rows = std::max<std::size_t>(params.n_scatterers, 1);
    const double span = params.depth_max_m - params.depth_min_m;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = params.depth_min_m +
                       span * (static_cast<double>(i) + 0.5) /
                           static_cast<double>(rows);
      ph.scatterers.push_back({d, 0.0, 1.0});
    }
    return ph;
  }

  if (params.n_scatterers == 0)
    throw std::invalid_argument("generate_phantom: n_scatterers must be >= 1");

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (std::size_t c = 0; c < params.n_cysts; ++c) {
    const double margin = 0.006;
    const double d = params.depth_min_m + margin +
                     (params.depth_max_m - params.depth_min_m - 2 * margin) *
                         u01(rng);
    const double lat = (u01(rng) - 0.5) * (params.lateral_extent_m - 2 * margin);
    const double radius = 0.003 + 0.004 * u01(rng);
    ph.cyst_regions.push_back({d, lat, radius, params.cyst_echogenicity});
  }

  ph.scatterers.reserve(params.n_scatterers);
  for (std::size_t i = 0; i < params.n_scatterers; ++i) {
    const double depth = params.depth_min_m +
                         (params.depth_max_m - params.depth_min_m) * u01(rng);
    const double lateral = (u01(rng) - 0.5) * params.lateral_extent_m;
    // Rayleigh(sigma=1) via inverse CDF.
    double amp = std::sqrt(-2.0 * std::log(1.0 - u01(rng)));
    for (const auto& cyst : ph.cyst_regions) {
      const double dd = depth - cyst.center_depth_m;
      const double dl = lateral - cyst.center_lateral_m;
      if (dd * dd + dl * dl < cyst.radius_m * cyst.radius_m) {
        amp *= cyst.echogenicity;
        break;
      }
    }
    ph.scatterers.push_back({depth, lateral, amp});
  }
  return ph;
}

namespace {

// Sparse reflectivity for one lateral beam position: two-way delay mapped to
// samples, amplitude split linearly between the neighbouring samples.
std::vector<double> reflectivity(const PhantomSpec& phantom, double line_x,
                                 double accept_halfwidth, double fs,
                                 std::size_t len) {
  std::vector<double> r(len, 0.0);
  for (const auto& s : phantom.scatterers) {
    if (std::abs(s.lateral_m - line_x) > accept_halfwidth) continue;
    const double delay_samples = 2.0 * s.depth_m / kSpeedOfSound * fs;
    const auto i0 = static_cast<std::size_t>(std::floor(delay_samples));
    const double frac = delay_samples - std::floor(delay_samples);
    if (i0 + 1 < len) {
      r[i0] += (1.0 - frac) * s.amplitude;
      r[i0 + 1] += frac * s.amplitude;
    }
  }
  return r;
}

// Full convolution of two short pulses.
std::vector<double> conv(const std::vector<double>& a,
                         const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace

std::vector<RfLine> simulate_rf(const PhantomSpec& phantom,
                                const ProbeSpec& probe,
                                const ExcitationSpec& excitation,
                                const SimParams& params) {
  probe.validate();
  const auto h = synth_probe_impulse(probe, probe.fs);
  const auto e = synth_excitation(excitation, probe.fs);
  const auto pulse = conv(h, e);
  const auto center = static_cast<std::ptrdiff_t>((pulse.size() - 1) / 2);

  std::vector<RfLine> lines;
  lines.reserve(params.n_lines);
  bool warned = false;
  for (std::size_t li = 0; li < params.n_lines; ++li) {
    const double x = -phantom.lateral_extent_m / 2.0 +
                     phantom.lateral_extent_m *
                         (static_cast<double>(li) + 0.5) /
                         static_cast<double>(params.n_lines);
    const auto r = reflectivity(phantom, x, params.accept_halfwidth_m,
                                probe.fs, params.line_len);
    RfLine line;
    line.fs = probe.fs;
    line.line_index = static_cast<int>(li);
    line.band = excitation.target_frac_bw > 0.9 ? BandTag::high : BandTag::low;
    line.samples.assign(params.line_len, 0.0);
    bool any = false;
    for (std::size_t m = 0; m < r.size(); ++m) {
      if (r[m] == 0.0) continue;
      any = true;
      for (std::size_t j = 0; j < pulse.size(); ++j) {
        const std::ptrdiff_t n =
            static_cast<std::ptrdiff_t>(m + j) - center;
        if (n >= 0 && n < static_cast<std::ptrdiff_t>(params.line_len))
          line.samples[static_cast<std::size_t>(n)] += r[m] * pulse[j];
      }
    }
    if (!any && !warned) {
      std::cerr << "simulate_rf: empty acceptance window, all-zero line "
                << li << "\n";
      warned = true;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<RfPair> simulate_pair_lines(const PhantomSpec& phantom,
                                        const ProbeSpec& probe,
                                        const ExcitationSpec& narrow,
                                        const ExcitationSpec& wide,
                                        const SimParams& params) {
  auto low = simulate_rf(phantom, probe, narrow, params);
  auto high = simulate_rf(phantom, probe, wide, params);
  std::vector<RfPair> pairs(low.size());
  for (std::size_t i = 0; i < low.size(); ++i) {
    low[i].band = BandTag::low;
    high[i].band = BandTag::high;
    pairs[i] = {std::move(low[i]), std::move(high[i])};
  }
  return pairs;
}

}  // namespace rfx::sim
