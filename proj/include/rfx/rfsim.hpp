#pragma once
// Paired narrow-band / wide-band RF line synthesis from point-scatterer
// phantoms. One idealised broadband probe impulse response is shared by both
// bands; only the Gaussian-modulated excitation differs, so a pair built
// from the same reflectivity differs purely by the excitation spectrum.

#include <cstdint>
#include <string>
#include <vector>

namespace rfx::sim {

inline constexpr double kSpeedOfSound = 1540.0;  // m/s, two-way propagation

struct ProbeSpec {
  double fc = 5.2e6;           // Hz
  double fs = 20.832e6;        // Hz
  double frac_bw_probe = 1.2;  // -6 dB fractional bandwidth
  double impulse_cycles = 16.0;  // upper bound for the window-length search
  void validate() const;
};

struct ExcitationSpec {
  double sigma_t = 0.0;  // derived from target_frac_bw when <= 0
  double fc = 5.2e6;
  double target_frac_bw = 0.6;  // 0.6 narrow, 1.2 wide
  void validate() const;
};

enum class PhantomKind { speckle_cyst, point_targets };

struct Scatterer {
  double depth_m;
  double lateral_m;
  double amplitude;
};

struct CystRegion {
  double center_depth_m;
  double center_lateral_m;
  double radius_m;
  double echogenicity;  // amplitude scale inside the region, < 1 hypoechoic
};

struct PhantomSpec {
  PhantomKind kind = PhantomKind::speckle_cyst;
  std::vector<Scatterer> scatterers;
  std::vector<CystRegion> cyst_regions;
  std::uint64_t rng_seed = 0;
  // Imaging window geometry.
  double depth_min_m = 0.005;
  double depth_max_m = 0.050;
  double lateral_extent_m = 0.040;
};

enum class BandTag { low, high };

struct RfLine {
  std::vector<double> samples;
  double fs = 0.0;
  int phantom_id = 0;
  int line_index = 0;
  BandTag band = BandTag::low;
};

struct RfPair {
  RfLine low;
  RfLine high;
};

enum class Split { train, val, test };

struct PairedDataset {
  std::vector<RfPair> pairs;
  std::vector<Split> split;  // one tag per pair
  ProbeSpec probe;
  std::size_t line_len = 1536;
};

// Amplitude-spectrum -6 dB fractional bandwidth of a real pulse, relative
// to the nominal center frequency fc. Throws if a crossing is missing.
double measure_frac_bw(const std::vector<double>& pulse, double fs, double fc);

// Hann-windowed sinusoid at probe.fc whose measured -6 dB fractional
// bandwidth matches probe.frac_bw_probe within 2% relative; the window
// duration is found by bisection. Throws if the band cannot fit below
// Nyquist or the tolerance cannot be met.
std::vector<double> synth_probe_impulse(const ProbeSpec& probe, double fs);

// Gaussian-modulated cosine truncated at +-4 sigma_t. sigma_t comes from
// the analytic -6 dB half-width relation when not set explicitly.
std::vector<double> synth_excitation(const ExcitationSpec& spec, double fs);
double sigma_from_frac_bw(double target_frac_bw, double fc);

struct PhantomParams {
  std::size_t n_scatterers = 2000;
  double depth_min_m = 0.005;
  double depth_max_m = 0.050;
  double lateral_extent_m = 0.040;
  std::size_t n_cysts = 2;
  double cyst_echogenicity = 0.1;
};

PhantomSpec generate_phantom(PhantomKind kind, const PhantomParams& params,
                             std::uint64_t rng_seed);

struct SimParams {
  std::size_t n_lines = 64;
  std::size_t line_len = 1536;
  double accept_halfwidth_m = 0.5e-3;  // lateral acceptance around each line
};

std::vector<RfLine> simulate_rf(const PhantomSpec& phantom,
                                const ProbeSpec& probe,
                                const ExcitationSpec& excitation,
                                const SimParams& params);

// Convenience: both bands from the identical reflectivity.
std::vector<RfPair> simulate_pair_lines(const PhantomSpec& phantom,
                                        const ProbeSpec& probe,
                                        const ExcitationSpec& narrow,
                                        const ExcitationSpec& wide,
                                        const SimParams& params);

}  // namespace rfx::sim
