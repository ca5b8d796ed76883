#include "rfx/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace rfx::metrics {

void RoiMask::validate(std::size_t image_size) const {
  if (foreground.empty() || background.empty())
    throw std::invalid_argument("roi: empty region");
  for (auto i : foreground)
    if (i >= image_size) throw std::invalid_argument("roi: index out of range");
  for (auto i : background) {
    if (i >= image_size) throw std::invalid_argument("roi: index out of range");
    for (auto j : foreground)
      if (i == j)
        throw std::invalid_argument("roi: regions must be disjoint");
  }
}

double mse(const Image& a, const Image& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.pixels.size() != b.pixels.size())
    throw std::invalid_argument("mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

double psnr(const Image& a, const Image& b, double data_range) {
  if (data_range <= 0.0)
    throw std::invalid_argument("psnr: data_range must be > 0");
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrInf;
  return 10.0 * std::log10(data_range * data_range / m);
}

namespace {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
std::vector<double> ssim_window() {
  constexpr int kHalf = 5;
  std::vector<double> w(11 * 11);
  double s = 0.0;
  for (int i = -kHalf; i <= kHalf; ++i)
    for (int j = -kHalf; j <= kHalf; ++j) {
      const double v = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
      w[(i + kHalf) * 11 + (j + kHalf)] = v;
      s += v;
    }
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace

double ssim(const Image& a, const Image& b, double data_range) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("ssim: shape mismatch");
  if (a.rows < 11 || a.cols < 11)
    throw std::invalid_argument("ssim: image must be at least 11x11");
  static const std::vector<double> win = ssim_window();
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);

  // Separable-free direct accumulation per window position, but using
  // weighted raw moments gathered in a single pass over the window.
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + 11 <= a.rows; ++r) {
    for (std::size_t c = 0; c + 11 <= a.cols; ++c) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (std::size_t i = 0; i < 11; ++i)
        for (std::size_t j = 0; j < 11; ++j) {
          const double w = win[i * 11 + j];
          const double va = a.at(r + i, c + j);
          const double vb = b.at(r + i, c + j);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den =
          (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

RoiStats cnr_snr(const Image& img, const RoiMask& mask) {
  mask.validate(img.pixels.size());
  auto stats = [&](const std::vector<std::size_t>& idx) {
    double mu = 0.0;
    for (auto i : idx) mu += img.pixels[i];
    mu /= static_cast<double>(idx.size());
    double var = 0.0;
    for (auto i : idx) {
      const double d = img.pixels[i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(idx.size());
    return std::pair<double, double>{mu, std::sqrt(var)};
  };
  const auto [mu_f, sig_f] = stats(mask.foreground);
  const auto [mu_b, sig_b] = stats(mask.background);
  if (sig_f == 0.0 || sig_b == 0.0)
    throw std::invalid_argument("cnr_snr: zero variance in an ROI");
  RoiStats out;
  out.cnr = std::abs(mu_f - mu_b) / std::sqrt(sig_f * sig_f + sig_b * sig_b);
  out.snr_db = 20.0 * std::log10(mu_f / sig_f);
  return out;
}

double fwhm_seconds(const std::vector<double>& envelope_row, double fs) {
  if (envelope_row.size() < 3)
    throw std::invalid_argument("fwhm: trace too short");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < envelope_row.size(); ++i)
    if (envelope_row[i] > envelope_row[peak]) peak = i;
  const double half = envelope_row[peak] / 2.0;

  double left = -1.0, right = -1.0;
  for (std::size_t i = peak; i-- > 0;) {
    if (envelope_row[i] < half) {
      const double frac =
          (envelope_row[i + 1] - half) / (envelope_row[i + 1] - envelope_row[i]);
      left = static_cast<double>(i + 1) - frac;
      break;
    }
  }
  for (std::size_t i = peak + 1; i < envelope_row.size(); ++i) {
    if (envelope_row[i] < half) {
      const double frac =
          (envelope_row[i - 1] - half) / (envelope_row[i - 1] - envelope_row[i]);
      right = static_cast<double>(i - 1) + frac;
      break;
    }
  }
  if (left < 0.0 || right < 0.0)
    throw std::runtime_error("fwhm: half-maximum crossing not found");
  return (right - left) / fs;
}

double fwhm_mm(double fwhm_s) {
  // Two-way travel: axial extent = c * t / 2.
  return fwhm_s * 1540.0 / 2.0 * 1000.0;
}

MetricReport compare_images(const Image& a, const Image& b,
                            double data_range) {
  MetricReport r;
  r.mse = mse(a, b);
  r.psnr_db = psnr(a, b, data_range);
  r.ssim = ssim(a, b, data_range);
  return r;
}

}  // namespace rfx::metrics
