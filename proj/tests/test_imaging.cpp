#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "rfx/imaging.hpp"

using namespace rfx;
using namespace rfx::imaging;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFs = 20.832e6;

// A line carrying one Gaussian-modulated burst centered at `center`.
sim::RfLine burst_line(std::size_t len, std::size_t center, double amp,
                       int index = 0) {
  sim::RfLine l;
  l.fs = kFs;
  l.line_index = index;
  l.samples.resize(len);
  const double sigma = 12.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(center);
    l.samples[i] = amp * std::exp(-d * d / (2.0 * sigma * sigma)) *
                   std::cos(2.0 * kPi * 0.25 * d);
  }
  return l;
}

}  // namespace

TEST_CASE("bright blob lands at its line and depth, background at zero") {
  std::vector<sim::RfLine> lines;
  for (int i = 0; i < 4; ++i)
    lines.push_back(burst_line(512, 300, i == 2 ? 1.0 : 1e-6, i));
  auto img = render_bmode(lines, 60.0);
  CHECK(img.pixels.rows == 512);
  CHECK(img.pixels.cols == 4);
  // Peak pixel is 1.0 at (300, 2).
  CHECK(img.pixels.at(300, 2) == doctest::Approx(1.0).epsilon(1e-9));
  // Same depth on the weak lines sits at the dynamic-range floor:
  // 20*log10(1e-6) = -120 dB, clamped to -60 -> 0.
  CHECK(img.pixels.at(300, 0) == 0.0);
  // Every pixel lies in [0, 1].
  for (double v : img.pixels.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("rendering is invariant to global amplitude scaling") {
  std::vector<sim::RfLine> a{burst_line(256, 100, 1.0),
                             burst_line(256, 180, 0.3)};
  auto b = a;
  for (auto& l : b)
    for (auto& s : l.samples) s *= 37.5;
  auto ia = render_bmode(a, 60.0);
  auto ib = render_bmode(b, 60.0);
  for (std::size_t i = 0; i < ia.pixels.pixels.size(); ++i)
    CHECK(ia.pixels.pixels[i] ==
          doctest::Approx(ib.pixels.pixels[i]).epsilon(1e-12));
}

TEST_CASE("the dB mapping hits exact control points") {
  // Construct two lines whose envelope ratio is known: amplitudes 1 and
  // 10^(-30/20) give -30 dB -> pixel 0.5 at 60 dB dynamic range.
  std::vector<sim::RfLine> lines{burst_line(256, 128, 1.0),
                                 burst_line(256, 128, std::pow(10.0, -1.5))};
  auto img = render_bmode(lines, 60.0);
  CHECK(img.pixels.at(128, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(img.pixels.at(128, 1) == doctest::Approx(0.5).epsilon(1e-3));
  // Tighter dynamic range pushes the same ratio down the scale.
  auto img40 = render_bmode(lines, 40.0);
  CHECK(img40.pixels.at(128, 1) == doctest::Approx(0.25).epsilon(2e-3));
}

TEST_CASE("pixel pitch follows the sampling geometry") {
  std::vector<sim::RfLine> lines{burst_line(256, 100, 1.0),
                                 burst_line(256, 100, 1.0)};
  auto img = render_bmode(lines, 60.0, 0.040);
  CHECK(img.mm_per_row ==
        doctest::Approx(1540.0 / (2.0 * kFs) * 1000.0).epsilon(1e-12));
  CHECK(img.mm_per_col == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(render_bmode({}, 60.0), std::invalid_argument);
  sim::RfLine zero;
  zero.fs = kFs;
  zero.samples.assign(256, 0.0);
  CHECK_THROWS_AS(render_bmode({zero}, 60.0), std::invalid_argument);
  auto a = burst_line(256, 100, 1.0);
  auto b = burst_line(128, 50, 1.0);
  CHECK_THROWS_AS(render_bmode({a, b}, 60.0), std::invalid_argument);
}

TEST_CASE("pgm export writes a parseable P5 with quantized pixels") {
  std::vector<sim::RfLine> lines{burst_line(64, 32, 1.0),
                                 burst_line(64, 40, 0.5)};
  auto img = render_bmode(lines, 60.0);
  const std::string path = "test_imaging_out.pgm";
  export_image(img, path);

  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  in.get();  // single whitespace after the header
  CHECK(magic == "P5");
  CHECK(w == img.pixels.cols);
  CHECK(h == img.pixels.rows);
  CHECK(maxv == 255);
  std::vector<unsigned char> data(w * h);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<long>(w * h));
  REQUIRE(in.gcount() == static_cast<long>(w * h));
  for (std::size_t i = 0; i < data.size(); ++i)
    CHECK(static_cast<int>(data[i]) ==
          static_cast<int>(std::lround(255.0 * img.pixels.pixels[i])));
  std::remove(path.c_str());
}

TEST_CASE("triptych stacks panels with one-column gaps") {
  std::vector<sim::RfLine> lines{burst_line(64, 32, 1.0),
                                 burst_line(64, 20, 0.7)};
  auto a = render_bmode(lines, 60.0);
  auto trip = compose_triptych(a, a, a);
  CHECK(trip.pixels.rows == 64);
  CHECK(trip.pixels.cols == 3 * 2 + 2);
  for (std::size_t r = 0; r < 64; ++r) {
    // Gap columns are white.
    CHECK(trip.pixels.at(r, 2) == 1.0);
    CHECK(trip.pixels.at(r, 5) == 1.0);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(trip.pixels.at(r, c) == a.pixels.at(r, c));
      CHECK(trip.pixels.at(r, 3 + c) == a.pixels.at(r, c));
      CHECK(trip.pixels.at(r, 6 + c) == a.pixels.at(r, c));
    }
  }
}

TEST_CASE("triptych rejects mismatched depths") {
  std::vector<sim::RfLine> a{burst_line(64, 32, 1.0)};
  std::vector<sim::RfLine> b{burst_line(32, 16, 1.0)};
  auto ia = render_bmode(a, 60.0);
  auto ib = render_bmode(b, 60.0);
  CHECK_THROWS_AS(compose_triptych(ia, ib, ia), std::invalid_argument);
}
