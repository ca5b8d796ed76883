#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rfx/fft.hpp"
#include "rfx/rfsim.hpp"

using namespace rfx;
using namespace rfx::sim;

namespace {

std::vector<double> conv_full(const std::vector<double>& a,
                              const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> padded_mag_spectrum(const std::vector<double>& x,
                                        std::size_t n) {
  std::vector<dsp::cplx> buf(n, dsp::cplx(0.0, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  auto spec = dsp::fft(std::move(buf));
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) mag[k] = std::abs(spec[k]);
  return mag;
}

ProbeSpec default_probe() { return ProbeSpec{}; }

}  // namespace

TEST_CASE("probe impulse hits the requested -6 dB fractional bandwidth") {
  const auto probe = default_probe();
  auto h = synth_probe_impulse(probe, probe.fs);
  const double bw = measure_frac_bw(h, probe.fs, probe.fc);
  CHECK(bw == doctest::Approx(1.2).scale(0.0).epsilon(0.02));
  // Band edges ~2.08 and ~8.32 MHz for fc=5.2 MHz.
  auto mag = padded_mag_spectrum(h, 1 << 14);
  const double df = probe.fs / static_cast<double>(1 << 14);
  const double peak = *std::max_element(mag.begin(), mag.end());
  const auto lo_bin = static_cast<std::size_t>(2.08e6 / df);
  const auto hi_bin = static_cast<std::size_t>(8.32e6 / df);
  CHECK(mag[lo_bin] == doctest::Approx(peak / 2.0).epsilon(0.08));
  CHECK(mag[hi_bin] == doctest::Approx(peak / 2.0).epsilon(0.08));
}

TEST_CASE("measured bandwidth shrinks monotonically with window length") {
  const auto probe = default_probe();
  double prev = 1e9;
  for (double cycles : {2.0, 4.0, 8.0, 16.0}) {
    // Direct Hann pulses of increasing duration.
    std::vector<double> p;
    const double dur = cycles / probe.fc;
    const auto n = static_cast<std::size_t>(dur * probe.fs) + 1;
    p.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / probe.fs;
      p[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / dur)) *
             std::cos(2.0 * std::numbers::pi * probe.fc * (t - dur / 2.0));
    }
    const double bw = measure_frac_bw(p, probe.fs, probe.fc);
    CHECK(bw < prev);
    prev = bw;
  }
}

TEST_CASE("unattainable probe bandwidth is a configuration error") {
  ProbeSpec probe;
  probe.frac_bw_probe = 1.9;  // upper edge above Nyquist
  CHECK_THROWS(synth_probe_impulse(probe, probe.fs));
}

TEST_CASE("narrow excitation: -6 dB points at fc*(1 +- 0.3)") {
  ExcitationSpec spec;
  spec.target_frac_bw = 0.6;
  auto e = synth_excitation(spec, 20.832e6);
  CHECK(measure_frac_bw(e, 20.832e6, spec.fc) ==
        doctest::Approx(0.6).scale(0.0).epsilon(0.02));
  auto mag = padded_mag_spectrum(e, 1 << 14);
  const double df = 20.832e6 / static_cast<double>(1 << 14);
  const double peak = *std::max_element(mag.begin(), mag.end());
  const auto lo = static_cast<std::size_t>(spec.fc * 0.7 / df);
  const auto hi = static_cast<std::size_t>(spec.fc * 1.3 / df);
  CHECK(mag[lo] == doctest::Approx(peak / 2.0).epsilon(0.05));
  CHECK(mag[hi] == doctest::Approx(peak / 2.0).epsilon(0.05));
}

TEST_CASE("wide excitation: -6 dB points at fc*(1 +- 0.6)") {
  ExcitationSpec spec;
  spec.target_frac_bw = 1.2;
  auto e = synth_excitation(spec, 20.832e6);
  CHECK(measure_frac_bw(e, 20.832e6, spec.fc) ==
        doctest::Approx(1.2).scale(0.0).epsilon(0.02));
}

TEST_CASE("growing sigma_t collapses the spectrum towards a line") {
  ExcitationSpec spec;
  spec.target_frac_bw = 0.6;
  double prev = 1e9;
  for (double scale : {1.0, 2.0, 4.0}) {
    spec.sigma_t = sigma_from_frac_bw(0.6, spec.fc) * scale;
    auto e = synth_excitation(spec, 20.832e6);
    const double bw = measure_frac_bw(e, 20.832e6, spec.fc);
    CHECK(bw < prev);
    prev = bw;
  }
  CHECK(prev < 0.2);
}

TEST_CASE("aliasing excitation is rejected") {
  ExcitationSpec spec;
  spec.fc = 9.0e6;
  spec.sigma_t = 2.0e-8;  // extremely short pulse, huge bandwidth
  CHECK_THROWS_AS(synth_excitation(spec, 20.832e6), std::invalid_argument);
}

TEST_CASE("point-target phantom: one isolated scatterer per row") {
  PhantomParams params;
  params.n_scatterers = 5;
  auto ph = generate_phantom(PhantomKind::point_targets, params, 0);
  REQUIRE(ph.scatterers.size() == 5);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(ph.scatterers[i].depth_m > ph.scatterers[i - 1].depth_m);
  for (const auto& s : ph.scatterers) CHECK(s.amplitude == 1.0);
}

TEST_CASE("zero scatterers is rejected") {
  PhantomParams params;
  params.n_scatterers = 0;
  CHECK_THROWS_AS(generate_phantom(PhantomKind::speckle_cyst, params, 0),
                  std::invalid_argument);
}

TEST_CASE("speckle amplitudes pass a Rayleigh KS test at alpha=0.01") {
  PhantomParams params;
  params.n_scatterers = 10000;
  params.n_cysts = 0;  // cysts rescale amplitudes, skip them here
  auto ph = generate_phantom(PhantomKind::speckle_cyst, params, 123);
  std::vector<double> amps;
  for (const auto& s : ph.scatterers) amps.push_back(s.amplitude);
  std::sort(amps.begin(), amps.end());
  // KS statistic against the Rayleigh(sigma=1) CDF 1 - exp(-x^2/2).
  double d_stat = 0.0;
  const double n = static_cast<double>(amps.size());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double cdf = 1.0 - std::exp(-amps[i] * amps[i] / 2.0);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d_stat = std::max({d_stat, std::abs(cdf - lo), std::abs(cdf - hi)});
  }
  // Critical value at alpha = 0.01: 1.628 / sqrt(n).
  CHECK(d_stat < 1.628 / std::sqrt(n));
}

TEST_CASE("cyst interiors are hypoechoic") {
  PhantomParams params;
  params.n_scatterers = 20000;
  params.n_cysts = 2;
  params.cyst_echogenicity = 0.1;
  auto ph = generate_phantom(PhantomKind::speckle_cyst, params, 7);
  REQUIRE(ph.cyst_regions.size() == 2);
  double inside = 0.0, outside = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (const auto& s : ph.scatterers) {
    bool in = false;
    for (const auto& c : ph.cyst_regions) {
      const double dd = s.depth_m - c.center_depth_m;
      const double dl = s.lateral_m - c.center_lateral_m;
      if (dd * dd + dl * dl < c.radius_m * c.radius_m) in = true;
    }
    if (in) {
      inside += s.amplitude;
      ++n_in;
    } else {
      outside += s.amplitude;
      ++n_out;
    }
  }
  REQUIRE(n_in > 100);
  CHECK(inside / n_in < 0.2 * (outside / n_out));
}

TEST_CASE("single scatterer: envelope peak lands at the two-way delay") {
  const auto probe = default_probe();
  ExcitationSpec wide;
  wide.target_frac_bw = 1.2;
  PhantomSpec ph;
  ph.kind = PhantomKind::point_targets;
  const double depth = 0.025;
  ph.scatterers = {{depth, 0.0, 1.0}};
  SimParams sp;
  sp.n_lines = 1;
  // Center the single line on the scatterer.
  ph.lateral_extent_m = 1e-4;
  auto lines = simulate_rf(ph, probe, wide, sp);
  REQUIRE(lines.size() == 1);
  auto env = dsp::envelope(lines[0].samples);
  const auto peak = static_cast<long>(
      std::max_element(env.begin(), env.end()) - env.begin());
  const long expected =
      std::lround(2.0 * depth / kSpeedOfSound * probe.fs);
  CHECK(std::abs(peak - expected) <= 1);
}

TEST_CASE("narrow-band echo has a strictly wider envelope main lobe") {
  const auto probe = default_probe();
  ExcitationSpec narrow, wide;
  narrow.target_frac_bw = 0.6;
  wide.target_frac_bw = 1.2;
  PhantomSpec ph;
  ph.kind = PhantomKind::point_targets;
  ph.scatterers = {{0.025, 0.0, 1.0}};
  ph.lateral_extent_m = 1e-4;
  SimParams sp;
  sp.n_lines = 1;
  auto lo = simulate_rf(ph, probe, narrow, sp);
  auto hi = simulate_rf(ph, probe, wide, sp);
  auto fwhm = [](const std::vector<double>& env) {
    const auto peak = static_cast<std::size_t>(
        std::max_element(env.begin(), env.end()) - env.begin());
    const double half = env[peak] / 2.0;
    std::size_t l = peak, r = peak;
    while (l > 0 && env[l] > half) --l;
    while (r < env.size() - 1 && env[r] > half) ++r;
    return static_cast<double>(r - l);
  };
  CHECK(fwhm(dsp::envelope(lo[0].samples)) >
        fwhm(dsp::envelope(hi[0].samples)));
}

TEST_CASE("wide-excited single-scatterer spectrum matches |H*E| product") {
  const auto probe = default_probe();
  ExcitationSpec wide;
  wide.target_frac_bw = 1.2;
  PhantomSpec ph;
  ph.kind = PhantomKind::point_targets;
  // Integer-sample two-way delay, so the reflectivity is a single impulse
  // and the line spectrum is exactly the pulse spectrum times a phase ramp.
  const double depth = 676.0 * kSpeedOfSound / (2.0 * probe.fs);
  ph.scatterers = {{depth, 0.0, 1.0}};
  ph.lateral_extent_m = 1e-4;
  SimParams sp;
  sp.n_lines = 1;
  auto lines = simulate_rf(ph, probe, wide, sp);

  auto h = synth_probe_impulse(probe, probe.fs);
  auto e = synth_excitation(wide, probe.fs);
  auto product = conv_full(h, e);

  const std::size_t n = 1 << 12;
  auto mag_line = padded_mag_spectrum(lines[0].samples, n);
  auto mag_prod = padded_mag_spectrum(product, n);
  const double s_line = *std::max_element(mag_line.begin(), mag_line.end());
  const double s_prod = *std::max_element(mag_prod.begin(), mag_prod.end());
  for (std::size_t k = 0; k <= n / 2; ++k)
    CHECK(mag_line[k] / s_line ==
          doctest::Approx(mag_prod[k] / s_prod).epsilon(1e-6));
}

TEST_CASE("pairing invariance: bands agree after cross-band refiltering") {
  const auto probe = default_probe();
  ExcitationSpec narrow, wide;
  narrow.target_frac_bw = 0.6;
  wide.target_frac_bw = 1.2;
  PhantomParams params;
  params.n_scatterers = 500;
  auto ph = generate_phantom(PhantomKind::speckle_cyst, params, 3);
  SimParams sp;
  sp.n_lines = 4;
  auto pairs = simulate_pair_lines(ph, probe, narrow, wide, sp);
  auto e_n = synth_excitation(narrow, probe.fs);
  auto e_w = synth_excitation(wide, probe.fs);
  // Each band's composite pulse is center-aligned inside simulate_rf, so the
  // two cross-convolutions land offset by half the excitation length gap.
  const std::size_t off = (e_n.size() - e_w.size()) / 2;
  for (const auto& pair : pairs) {
    // low = r*h*e_n, high = r*h*e_w, so low*e_w == high*e_n away from the
    // truncation edges.
    auto a = conv_full(pair.low.samples, e_w);
    auto b = conv_full(pair.high.samples, e_n);
    const std::size_t guard = e_w.size() + e_n.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = guard; i + off + guard < b.size(); ++i) {
      num += (a[i] - b[i + off]) * (a[i] - b[i + off]);
      den += b[i + off] * b[i + off];
    }
    CHECK(std::sqrt(num / den) < 1e-3);
  }
}

TEST_CASE("simulation is linear in scatterer amplitudes") {
  const auto probe = default_probe();
  ExcitationSpec wide;
  wide.target_frac_bw = 1.2;
  PhantomSpec ph1, ph2, both;
  for (auto* p : {&ph1, &ph2, &both}) p->lateral_extent_m = 1e-4;
  ph1.scatterers = {{0.020, 0.0, 1.0}};
  ph2.scatterers = {{0.030, 0.0, 2.5}};
  both.scatterers = {{0.020, 0.0, 1.0}, {0.030, 0.0, 2.5}};
  SimParams sp;
  sp.n_lines = 1;
  auto a = simulate_rf(ph1, probe, wide, sp);
  auto b = simulate_rf(ph2, probe, wide, sp);
  auto c = simulate_rf(both, probe, wide, sp);
  for (std::size_t i = 0; i < sp.line_len; ++i)
    CHECK(c[0].samples[i] ==
          doctest::Approx(a[0].samples[i] + b[0].samples[i]).epsilon(1e-12));
}

TEST_CASE("identical seeds give bit-identical datasets") {
  PhantomParams params;
  params.n_scatterers = 300;
  auto ph1 = generate_phantom(PhantomKind::speckle_cyst, params, 99);
  auto ph2 = generate_phantom(PhantomKind::speckle_cyst, params, 99);
  REQUIRE(ph1.scatterers.size() == ph2.scatterers.size());
  for (std::size_t i = 0; i < ph1.scatterers.size(); ++i) {
    CHECK(ph1.scatterers[i].depth_m == ph2.scatterers[i].depth_m);
    CHECK(ph1.scatterers[i].lateral_m == ph2.scatterers[i].lateral_m);
    CHECK(ph1.scatterers[i].amplitude == ph2.scatterers[i].amplitude);
  }
  const auto probe = default_probe();
  ExcitationSpec narrow;
  narrow.target_frac_bw = 0.6;
  SimParams sp;
  sp.n_lines = 2;
  auto l1 = simulate_rf(ph1, probe, narrow, sp);
  auto l2 = simulate_rf(ph2, probe, narrow, sp);
  for (std::size_t i = 0; i < l1.size(); ++i)
    CHECK(l1[i].samples == l2[i].samples);
}
