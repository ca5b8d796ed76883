#include "rfx/loss_schedule.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace rfx::loss {

LossTerms loss_terms(const dsp::MagPhaseTensor& pred,
                     const dsp::MagPhaseTensor& target, bool circular_phase) {
  const std::size_t n = pred.mag.size();
  if (n != target.mag.size() || pred.phase.size() != target.phase.size() ||
      pred.n_frames != target.n_frames || pred.n_bins != target.n_bins)
    throw std::invalid_argument("loss_terms: shape mismatch");

  LossTerms out;
  for (std::size_t i = 0; i < n; ++i) {
    const double dm = pred.mag[i] - target.mag[i];
    out.mag += dm * dm;

    double dp = pred.phase[i] - target.phase[i];
    if (circular_phase)
      dp = std::atan2(std::sin(dp), std::cos(dp));
    out.phase += dp * dp;

    const double ex = pred.mag[i] * std::cos(pred.phase[i]) -
                      target.mag[i] * std::cos(target.phase[i]);
    const double ey = pred.mag[i] * std::sin(pred.phase[i]) -
                      target.mag[i] * std::sin(target.phase[i]);
    out.cplx += ex * ex + ey * ey;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.mag *= inv_n;
  out.phase *= inv_n;
  out.cplx *= inv_n;
  return out;
}

double composite_loss(const LossTerms& terms, const CurriculumState& state) {
  const double s = state.w_mag + state.w_phase + state.w_cplx;
  if (std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument("composite_loss: weights must sum to 1");
  return state.w_mag * terms.mag + state.w_phase * terms.phase +
         state.w_cplx * terms.cplx;
}

void update_weights(CurriculumState& state, double epoch_mean_mag,
                    double epoch_mean_phase) {
  if (state.epoch < 0) {
    // Epoch 0: store baselines, raw weights (1, 1, 0), then normalize.
    double b_mag = epoch_mean_mag;
    double b_phase = epoch_mean_phase;
    if (b_mag <= 0.0 || b_phase <= 0.0) {
      std::cerr << "update_weights: zero epoch-0 loss, clamping baseline\n";
      b_mag = std::max(b_mag, 1e-12);
      b_phase = std::max(b_phase, 1e-12);
    }
    state.baseline_mag = b_mag;
    state.baseline_phase = b_phase;
    state.ema_mag = b_mag;
    state.ema_phase = b_phase;
    state.raw_mag = 1.0;
    state.raw_phase = 1.0;
    state.raw_cplx = 0.0;
  } else {
    state.ema_mag = state.beta * state.ema_mag +
                    (1.0 - state.beta) * epoch_mean_mag;
    state.ema_phase = state.beta * state.ema_phase +
                      (1.0 - state.beta) * epoch_mean_phase;
    const double r_mag = std::min(1.0, state.ema_mag / state.baseline_mag);
    const double r_phase =
        std::min(1.0, state.ema_phase / state.baseline_phase);
    state.raw_mag = std::max(state.lambda_min, state.lambda_max * r_mag);
    state.raw_phase = std::max(state.lambda_min, state.lambda_max * r_phase);
    // The complex weight sees the clamped ratios, so in the fully converged
    // limit the raw weights settle at (0.1, 0.1, 0.9).
    const double r_mag_c = state.raw_mag / state.lambda_max;
    const double r_phase_c = state.raw_phase / state.lambda_max;
    state.raw_cplx =
        state.lambda_cplx_max * (1.0 - 0.5 * (r_mag_c + r_phase_c));
  }
  const double s = state.raw_mag + state.raw_phase + state.raw_cplx;
  state.w_mag = state.raw_mag / s;
  state.w_phase = state.raw_phase / s;
  state.w_cplx = state.raw_cplx / s;
  ++state.epoch;
}

}  // namespace rfx::loss
