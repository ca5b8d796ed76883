#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rfx/model.hpp"

using namespace rfx;
using namespace rfx::model;

namespace {

constexpr double kPi = std::numbers::pi;

dsp::MagPhaseTensor random_input(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> um(0.0, 2.0), up(-kPi, kPi);
  dsp::MagPhaseTensor x;
  x.n_frames = cfg.t;
  x.n_bins = cfg.f;
  x.mag.resize(cfg.t * cfg.f);
  x.phase.resize(cfg.t * cfg.f);
  for (auto& v : x.mag) v = um(rng);
  for (auto& v : x.phase) v = up(rng);
  return x;
}

ModelConfig tiny() {
  ModelConfig c;
  c.patch = 2;
  c.dim = 8;
  c.enc_layers = 1;
  c.dec_layers = 1;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.t = 4;
  c.f = 5;
  return c;
}

}  // namespace

TEST_CASE("desk config covers the default spectrogram grid") {
  auto cfg = ModelConfig::desk();
  CHECK(cfg.pad_t() == 56);
  CHECK(cfg.pad_f() == 264);
  CHECK(cfg.n_patches() == 7 * 33);
  CHECK(cfg.patch_len() == 128);
  cfg.validate();
}

TEST_CASE("config validation rejects malformed settings") {
  ModelConfig bad = ModelConfig::desk();
  bad.heads = 5;  // 64 % 5 != 0
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ModelConfig bad2 = ModelConfig::desk();
  bad2.t = 0;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("forward obeys the output contract") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(1);
  auto x = random_input(cfg, 2);
  auto y = forward(x, params);
  CHECK(y.n_frames == cfg.t);
  CHECK(y.n_bins == cfg.f);
  REQUIRE(y.mag.size() == cfg.t * cfg.f);
  REQUIRE(y.phase.size() == cfg.t * cfg.f);
  for (double m : y.mag) CHECK(m >= 0.0);
  for (double p : y.phase) {
    CHECK(p > -kPi - 1e-12);
    CHECK(p <= kPi + 1e-12);
  }
}

TEST_CASE("mismatched input grid is rejected") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(1);
  auto x = random_input(cfg, 2);
  x.n_frames += 1;
  x.mag.resize(x.n_frames * x.n_bins);
  x.phase.resize(x.n_frames * x.n_bins);
  CHECK_THROWS_AS(forward(x, params), std::invalid_argument);
}

TEST_CASE("init is deterministic per seed and truncated") {
  ModelParams a(tiny()), b(tiny()), c(tiny());
  a.init(7);
  b.init(7);
  c.init(8);
  CHECK(a.w_proj.value == b.w_proj.value);
  CHECK(a.enc[0].wq.value == b.enc[0].wq.value);
  CHECK(a.w_proj.value != c.w_proj.value);
  for (double v : a.w_proj.value) CHECK(std::abs(v) <= 0.04);
  for (double v : a.enc[0].ln1_g.value) CHECK(v == 1.0);
  for (double v : a.b_proj.value) CHECK(v == 0.0);
}

TEST_CASE("with zeroed weights the head bias tiles through the fold") {
  auto cfg = tiny();
  ModelParams params(cfg);
  // Leave everything at the zero default except the reconstruction bias.
  for (std::size_t i = 0; i < cfg.patch_len(); ++i)
    params.b_recon.value[i] = 0.05 * static_cast<double>(i) - 1.0;
  auto x = random_input(cfg, 3);
  auto y = forward(x, params);
  const std::size_t k = cfg.patch;
  for (std::size_t t = 0; t < cfg.t; ++t)
    for (std::size_t f = 0; f < cfg.f; ++f) {
      const std::size_t in_patch = (t % k) * k + (f % k);
      const double raw_mag = params.b_recon.value[in_patch];
      const double raw_phase = params.b_recon.value[k * k + in_patch];
      const double soft = std::log1p(std::exp(raw_mag));
      CHECK(y.mag[t * cfg.f + f] == doctest::Approx(soft).epsilon(1e-12));
      CHECK(y.phase[t * cfg.f + f] ==
            doctest::Approx(std::atan2(std::sin(raw_phase),
                                       std::cos(raw_phase))).epsilon(1e-12));
    }
}

TEST_CASE("positional encodings separate time and frequency blocks") {
  const std::size_t nt = 3, nf = 4, dim = 8;
  auto pe = positional_encoding(nt, nf, dim);
  REQUIRE(pe.size() == nt * nf * dim);
  for (double v : pe) CHECK(std::abs(v) <= 1.0 + 1e-12);
  auto row = [&](std::size_t tb, std::size_t fb) {
    return pe.data() + (tb * nf + fb) * dim;
  };
  // First half tracks the time block only; second half the frequency block.
  for (std::size_t tb = 0; tb < nt; ++tb)
    for (std::size_t i = 0; i < dim / 2; ++i)
      CHECK(row(tb, 0)[i] == row(tb, nf - 1)[i]);
  for (std::size_t fb = 0; fb < nf; ++fb)
    for (std::size_t i = dim / 2; i < dim; ++i)
      CHECK(row(0, fb)[i] == row(nt - 1, fb)[i]);
  // All token encodings are pairwise distinct.
  for (std::size_t a = 0; a < nt * nf; ++a)
    for (std::size_t b = a + 1; b < nt * nf; ++b) {
      double diff = 0.0;
      for (std::size_t i = 0; i < dim; ++i)
        diff = std::max(diff, std::abs(pe[a * dim + i] - pe[b * dim + i]));
      CHECK(diff > 1e-6);
    }
  // Position zero follows the classic sin/cos ladder start.
  CHECK(row(0, 0)[0] == 0.0);  // sin(0)
  CHECK(row(0, 0)[1] == 1.0);  // cos(0)
}

TEST_CASE("positional encodings make the model position sensitive") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(5);
  auto x = random_input(cfg, 9);
  // Swap two time frames of the input; an encoder without positions would
  // produce a correspondingly swapped output, not a different field.
  auto swapped = x;
  for (std::size_t f = 0; f < cfg.f; ++f) {
    std::swap(swapped.mag[0 * cfg.f + f], swapped.mag[2 * cfg.f + f]);
    std::swap(swapped.phase[0 * cfg.f + f], swapped.phase[2 * cfg.f + f]);
  }
  auto y1 = forward(x, params);
  auto y2 = forward(swapped, params);
  // Undo the swap on the output and check it does NOT match: position
  // information entered the computation.
  double diff = 0.0;
  for (std::size_t f = 0; f < cfg.f; ++f) {
    std::swap(y2.mag[0 * cfg.f + f], y2.mag[2 * cfg.f + f]);
    std::swap(y2.phase[0 * cfg.f + f], y2.phase[2 * cfg.f + f]);
  }
  for (std::size_t i = 0; i < y1.mag.size(); ++i)
    diff = std::max(diff, std::abs(y1.mag[i] - y2.mag[i]));
  CHECK(diff > 1e-9);
}

TEST_CASE("training mode updates running stats by the EMA rule") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(4);
  auto x = random_input(cfg, 10);
  const std::size_t m = cfg.t * cfg.f;
  // Expected EMA update computed directly from the input channels.
  auto stats = [&](const std::vector<double>& v) {
    double mean = 0.0, var = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(m);
    for (double e : v) var += (e - mean) * (e - mean);
    return std::pair{mean, var / static_cast<double>(m - 1)};
  };
  auto [mm, mv] = stats(x.mag);
  auto [pm, pv] = stats(x.phase);

  ad::Tape tape;
  forward_graph(tape, x, params, true, true);
  CHECK(params.bn_run_mean[0] == doctest::Approx(0.1 * mm).epsilon(1e-12));
  CHECK(params.bn_run_mean[1] == doctest::Approx(0.1 * pm).epsilon(1e-12));
  CHECK(params.bn_run_var[0] ==
        doctest::Approx(0.9 + 0.1 * mv).epsilon(1e-12));
  CHECK(params.bn_run_var[1] ==
        doctest::Approx(0.9 + 0.1 * pv).epsilon(1e-12));

  // Inference must not touch them.
  auto before_m = params.bn_run_mean;
  forward(x, params, false);
  CHECK(params.bn_run_mean == before_m);
}

TEST_CASE("training and inference normalisation paths differ") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(6);
  // Bias the running stats away from the batch stats.
  params.bn_run_mean = {0.7, -0.4};
  params.bn_run_var = {2.0, 0.5};
  auto x = random_input(cfg, 11);
  ad::Tape t1, t2;
  auto a = forward_graph(t1, x, params, true, false);
  auto b = forward_graph(t2, x, params, false, false);
  double diff = 0.0;
  for (std::size_t i = 0; i < t1.val(a.mag).size(); ++i)
    diff = std::max(diff, std::abs(t1.val(a.mag)[i] - t2.val(b.mag)[i]));
  CHECK(diff > 1e-9);
}

TEST_CASE("full-model gradients pass finite differences on the tiny config") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(12);
  auto x = random_input(cfg, 13);
  const std::size_t m = cfg.t * cfg.f;

  params.zero_grads();
  {
    ad::Tape tape;
    auto out = forward_graph(tape, x, params, true, false);
    auto tm = tape.constant(std::vector<double>(m, 0.3), 1, m);
    auto tp = tape.constant(std::vector<double>(m, 0.1), 1, m);
    tape.backward(tape.weighted_sum(
        {tape.mse(out.mag, tm), tape.mse(out.phase, tp)}, {0.6, 0.4}));
  }

  auto eval = [&]() {
    ad::Tape tape;
    auto out = forward_graph(tape, x, params, true, false);
    auto tm = tape.constant(std::vector<double>(m, 0.3), 1, m);
    auto tp = tape.constant(std::vector<double>(m, 0.1), 1, m);
    return tape.scalar(tape.weighted_sum(
        {tape.mse(out.mag, tm), tape.mse(out.phase, tp)}, {0.6, 0.4}));
  };

  // Spot-check a deterministic sample of elements in every tensor.
  const double step = 1e-5;
  double worst = 0.0;
  for (ad::Param* p : params.trainable()) {
    const std::size_t stride = std::max<std::size_t>(1, p->value.size() / 7);
    for (std::size_t i = 0; i < p->value.size(); i += stride) {
      const double keep = p->value[i];
      p->value[i] = keep + step;
      const double up = eval();
      p->value[i] = keep - step;
      const double down = eval();
      p->value[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double err =
          std::abs(numeric - p->grad[i]) /
          std::max({1.0, std::abs(numeric), std::abs(p->grad[i])});
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("forward is deterministic") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(3);
  auto x = random_input(cfg, 4);
  auto y1 = forward(x, params);
  auto y2 = forward(x, params);
  CHECK(y1.mag == y2.mag);
  CHECK(y1.phase == y2.phase);
}

TEST_CASE("non-finite input is caught with a stage name") {
  auto cfg = tiny();
  ModelParams params(cfg);
  params.init(3);
  auto x = random_input(cfg, 4);
  x.mag[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(forward(x, params),
                       doctest::Contains("input"), std::runtime_error);
}
