#pragma once
// Training loop: per-line spectrogram batches, curriculum-weighted loss,
// decoupled-weight-decay adaptive optimizer, global gradient-norm clipping,
// per-epoch schedule updates, checkpointing and validation.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfx/autodiff.hpp"
#include "rfx/dsp.hpp"
#include "rfx/loss_schedule.hpp"
#include "rfx/model.hpp"
#include "rfx/rfsim.hpp"

namespace rfx::train {

struct TrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 1;
  std::string checkpoint_path;  // empty disables checkpointing
  std::string log_csv_path;     // empty disables the CSV log
  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long step = 0;
  void ensure(const std::vector<ad::Param*>& params);
};

// Decoupled update: p -= lr * m_hat / (sqrt(v_hat) + eps) + lr * wd * p.
// Weight decay bypasses the moment estimates entirely.
void optimizer_step(const std::vector<ad::Param*>& params, AdamState& state,
                    const TrainConfig& cfg);

// Scales all gradients by clip_norm / g when the global L2 norm g exceeds
// clip_norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<ad::Param*>& params,
                        double clip_norm);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_mag = 0.0, mean_phase = 0.0, mean_cplx = 0.0;
  double mean_composite = 0.0;
  double w_mag = 0.0, w_phase = 0.0, w_cplx = 0.0;
  double ema_mag = 0.0, ema_phase = 0.0;
  double val_composite = 0.0;  // NaN when no validation split exists
  double max_grad_norm = 0.0;  // max post-clip global norm this epoch
  double wall_s = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

// Raised when a NaN loss aborts training; the last good checkpoint (if any)
// is left on disk.
struct NumericAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainReport train(const sim::PairedDataset& dataset,
                  const dsp::StftConfig& stft_cfg, model::ModelParams& params,
                  loss::CurriculumState& curriculum, const TrainConfig& cfg);

}  // namespace rfx::train
