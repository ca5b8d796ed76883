#pragma once
// Two-channel spectrogram encoder-decoder: channel norm, 8x8 patchify,
// linear projection, 2-D sinusoidal positional encodings, pre-norm
// transformer blocks, linear reconstruction head, fold back to the
// magnitude/phase grid.

#include <cstdint>
#include <vector>

#include "rfx/autodiff.hpp"
#include "rfx/dsp.hpp"

namespace rfx::model {

struct ModelConfig {
  std::size_t patch = 8;  // kernel == stride
  std::size_t dim = 64;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::size_t t = 49;   // spectrogram frames
  std::size_t f = 257;  // spectrogram bins

  std::size_t pad_t() const { return ((t + patch - 1) / patch) * patch; }
  std::size_t pad_f() const { return ((f + patch - 1) / patch) * patch; }
  std::size_t n_patches() const {
    return (pad_t() / patch) * (pad_f() / patch);
  }
  std::size_t patch_len() const { return 2 * patch * patch; }
  void validate() const;

  static ModelConfig desk();         // D=64, 2 enc / 2 dec, 4 heads
  static ModelConfig full_scale();  // D=768, 4 enc / 2 dec, 12 heads
};

struct BlockParams {
  ad::Param ln1_g, ln1_b;
  ad::Param wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Param ln2_g, ln2_b;
  ad::Param w1, b1, w2, b2;
};

struct ModelParams {
  ModelConfig cfg;
  // Channel-wise input normalisation (2 channels).
  ad::Param bn_gamma, bn_beta;
  std::vector<double> bn_run_mean, bn_run_var;
  ad::Param w_proj, b_proj;    // (2*k*k) x D projection
  std::vector<BlockParams> enc, dec;
  ad::Param w_recon, b_recon;  // D x (2*k*k) head

  explicit ModelParams(const ModelConfig& c);
  void init(std::uint64_t seed);  // truncated-normal weights, zero biases
  std::vector<ad::Param*> trainable();
  std::size_t param_count();
  void zero_grads();
};

// 2-D sinusoidal encodings: first dim/2 entries follow the time-block
// index, the rest the frequency-block index.
std::vector<double> positional_encoding(std::size_t nt, std::size_t nf,
                                        std::size_t dim);

struct ForwardVars {
  ad::Tape::Var mag;    // 1 x (T*F), softplus-constrained
  ad::Tape::Var phase;  // 1 x (T*F), wrapped
};

// Builds the differentiable graph on the given tape. Throws on any
// non-finite activation, naming the first offending stage.
ForwardVars forward_graph(ad::Tape& tape, const dsp::MagPhaseTensor& x,
                          ModelParams& params, bool training,
                          bool update_running);

// Inference convenience: runs the graph on a throwaway tape.
dsp::MagPhaseTensor forward(const dsp::MagPhaseTensor& x, ModelParams& params,
                            bool training = false);

}  // namespace rfx::model
