#include "rfx/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rfx/fft.hpp"
#include "rfx/io.hpp"

namespace rfx::imaging {

BmodeImage render_bmode(const std::vector<sim::RfLine>& lines,
                        double dynamic_range_db, double lateral_extent_m) {
  if (lines.empty()) throw std::invalid_argument("render_bmode: no lines");
  const std::size_t len = lines[0].samples.size();
  const double fs = lines[0].fs;
  for (const auto& l : lines)
    if (l.samples.size() != len || l.fs != fs)
      throw std::invalid_argument("render_bmode: lines must share fs and L");

  std::vector<std::vector<double>> envs(lines.size());
  double global_max = 0.0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    envs[i] = dsp::envelope(lines[i].samples);
    for (double v : envs[i]) global_max = std::max(global_max, v);
  }
  if (global_max <= 0.0)
    throw std::invalid_argument("render_bmode: all-zero input");

  BmodeImage img;
  img.dynamic_range_db = dynamic_range_db;
  img.pixels.rows = len;
  img.pixels.cols = lines.size();
  img.pixels.pixels.assign(len * lines.size(), 0.0);
  for (std::size_t c = 0; c < lines.size(); ++c)
    for (std::size_t r = 0; r < len; ++r) {
      const double v = envs[c][r] / global_max;
      const double db = v > 0.0 ? 20.0 * std::log10(v) : -dynamic_range_db;
      const double clamped = std::clamp(db, -dynamic_range_db, 0.0);
      img.pixels.at(r, c) = clamped / dynamic_range_db + 1.0;
    }
  img.mm_per_row = sim::kSpeedOfSound / (2.0 * fs) * 1000.0;
  img.mm_per_col = lateral_extent_m > 0.0
                       ? lateral_extent_m / static_cast<double>(lines.size()) *
                             1000.0
                       : 0.0;
  return img;
}

void export_image(const BmodeImage& img, const std::string& path) {
  std::string out = "P5\n" + std::to_string(img.pixels.cols) + " " +
                    std::to_string(img.pixels.rows) + "\n255\n";
  out.reserve(out.size() + img.pixels.pixels.size());
  for (double v : img.pixels.pixels) {
    const int q = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    out.push_back(static_cast<char>(q));
  }
  try {
    io::atomic_write(path, out);
  } catch (const std::exception& e) {
    throw std::runtime_error("export_image: " + path + ": " + e.what());
  }
}

BmodeImage compose_triptych(const BmodeImage& truth, const BmodeImage& pred,
                            const BmodeImage& input) {
  const auto& t = truth.pixels;
  if (pred.pixels.rows != t.rows || input.pixels.rows != t.rows)
    throw std::invalid_argument("compose_triptych: row mismatch");
  const std::size_t gap = 1;
  BmodeImage out;
  out.dynamic_range_db = truth.dynamic_range_db;
  out.mm_per_row = truth.mm_per_row;
  out.pixels.rows = t.rows;
  out.pixels.cols =
      t.cols + pred.pixels.cols + input.pixels.cols + 2 * gap;
  out.pixels.pixels.assign(out.pixels.rows * out.pixels.cols, 1.0);
  const BmodeImage* panels[3] = {&truth, &pred, &input};
  std::size_t col0 = 0;
  for (const auto* p : panels) {
    for (std::size_t r = 0; r < t.rows; ++r)
      for (std::size_t c = 0; c < p->pixels.cols; ++c)
        out.pixels.at(r, col0 + c) = p->pixels.at(r, c);
    col0 += p->pixels.cols + gap;
  }
  return out;
}

}  // namespace rfx::imaging
