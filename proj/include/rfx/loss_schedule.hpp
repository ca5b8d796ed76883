#pragma once
// Magnitude / phase / complex loss terms, their weighted composite, and the
// adaptive per-epoch weight schedule that moves emphasis from the decoupled
// terms to the coupled complex term as training progresses.

#include <array>
#include <cstddef>

#include "rfx/dsp.hpp"

namespace rfx::loss {

struct LossTerms {
  double mag = 0.0;
  double phase = 0.0;
  double cplx = 0.0;
};

struct CurriculumState {
  double beta = 0.9;         // EMA coefficient
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  double lambda_cplx_max = 1.0;
  // Phase loss uses the raw wrapped-angle difference by default; the
  // circular-distance variant is available behind this flag.
  bool circular_phase = false;

  double baseline_mag = 0.0;
  double baseline_phase = 0.0;
  double ema_mag = 0.0;
  double ema_phase = 0.0;
  // Normalized weights, sum to 1 after the first update.
  double w_mag = 0.5;
  double w_phase = 0.5;
  double w_cplx = 0.0;
  // Pre-normalization values, kept for the monotonicity property.
  double raw_mag = 1.0;
  double raw_phase = 1.0;
  double raw_cplx = 0.0;
  long epoch = -1;  // last epoch applied; -1 before the first update
};

// Mean-squared losses over the spectrogram grid. Phase is compared on raw
// wrapped values unless state asks for the circular variant.
LossTerms loss_terms(const dsp::MagPhaseTensor& pred,
                     const dsp::MagPhaseTensor& target,
                     bool circular_phase = false);

// w_mag*l_mag + w_phase*l_phase + w_cplx*l_cplx. Throws if the stored
// weights do not sum to 1 within 1e-9.
double composite_loss(const LossTerms& terms, const CurriculumState& state);

// One per-epoch schedule step with that epoch's mean auxiliary losses.
// Epoch 0 stores baselines and yields (0.5, 0.5, 0).
void update_weights(CurriculumState& state, double epoch_mean_mag,
                    double epoch_mean_phase);

}  // namespace rfx::loss
