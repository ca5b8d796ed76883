#pragma once
// Image-quality metrics: MSE, PSNR, SSIM, ROI-based CNR/SNR, and axial
// FWHM of point-target envelopes.

#include <cstddef>
#include <limits>
#include <vector>

namespace rfx::metrics {

struct Image {
  std::vector<double> pixels;  // row-major, rows x cols
  std::size_t rows = 0, cols = 0;
  double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
};

struct RoiMask {
  std::vector<std::size_t> foreground;  // flat indices
  std::vector<std::size_t> background;
  void validate(std::size_t image_size) const;
};

double mse(const Image& a, const Image& b);
// 10*log10(range^2 / mse); +inf for identical images.
double psnr(const Image& a, const Image& b, double data_range);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// windows fully inside the image.
double ssim(const Image& a, const Image& b, double data_range);

struct RoiStats {
  double cnr = 0.0;     // |mu_f - mu_b| / sqrt(sig_f^2 + sig_b^2)
  double snr_db = 0.0;  // 20*log10(mu_f / sig_f)
};
RoiStats cnr_snr(const Image& img, const RoiMask& mask);

// Width between the half-maximum crossings around the global peak of an
// envelope trace, in seconds (sub-sample linear interpolation).
double fwhm_seconds(const std::vector<double>& envelope_row, double fs);
double fwhm_mm(double fwhm_s);  // via c = 1540 m/s, two-way

struct MetricReport {
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};
MetricReport compare_images(const Image& a, const Image& b,
                            double data_range);

inline constexpr double kPsnrInf = std::numeric_limits<double>::infinity();

}  // namespace rfx::metrics
