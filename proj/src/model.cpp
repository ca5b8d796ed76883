#include "rfx/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace rfx::model {

void ModelConfig::validate() const {
  if (dim == 0 || dim % heads != 0)
    throw std::invalid_argument("model: dim must be divisible by heads");
  if (dim % 4 != 0)
    throw std::invalid_argument("model: dim must be a multiple of 4");
  if (patch == 0 || t == 0 || f == 0)
    throw std::invalid_argument("model: zero-sized dimension");
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.dim = 64;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.heads = 4;
  return c;
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.dim = 768;
  c.enc_layers = 4;
  c.dec_layers = 2;
  c.heads = 12;
  return c;
}

namespace {

BlockParams make_block(const std::string& prefix, std::size_t d,
                       std::size_t mlp_ratio) {
  BlockParams b;
  b.ln1_g = ad::Param(prefix + ".ln1.g", 1, d);
  b.ln1_b = ad::Param(prefix + ".ln1.b", 1, d);
  b.wq = ad::Param(prefix + ".attn.wq", d, d);
  b.bq = ad::Param(prefix + ".attn.bq", 1, d);
  b.wk = ad::Param(prefix + ".attn.wk", d, d);
  b.bk = ad::Param(prefix + ".attn.bk", 1, d);
  b.wv = ad::Param(prefix + ".attn.wv", d, d);
  b.bv = ad::Param(prefix + ".attn.bv", 1, d);
  b.wo = ad::Param(prefix + ".attn.wo", d, d);
  b.bo = ad::Param(prefix + ".attn.bo", 1, d);
  b.ln2_g = ad::Param(prefix + ".ln2.g", 1, d);
  b.ln2_b = ad::Param(prefix + ".ln2.b", 1, d);
  b.w1 = ad::Param(prefix + ".mlp.w1", d, d * mlp_ratio);
  b.b1 = ad::Param(prefix + ".mlp.b1", 1, d * mlp_ratio);
  b.w2 = ad::Param(prefix + ".mlp.w2", d * mlp_ratio, d);
  b.b2 = ad::Param(prefix + ".mlp.b2", 1, d);
  return b;
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& c) : cfg(c) {
  cfg.validate();
  bn_gamma = ad::Param("bn.gamma", 1, 2);
  bn_beta = ad::Param("bn.beta", 1, 2);
  bn_run_mean.assign(2, 0.0);
  bn_run_var.assign(2, 1.0);
  w_proj = ad::Param("proj.w", cfg.patch_len(), cfg.dim);
  b_proj = ad::Param("proj.b", 1, cfg.dim);
  for (std::size_t i = 0; i < cfg.enc_layers; ++i)
    enc.push_back(make_block("enc." + std::to_string(i), cfg.dim,
                             cfg.mlp_ratio));
  for (std::size_t i = 0; i < cfg.dec_layers; ++i)
    dec.push_back(make_block("dec." + std::to_string(i), cfg.dim,
                             cfg.mlp_ratio));
  w_recon = ad::Param("recon.w", cfg.dim, cfg.patch_len());
  b_recon = ad::Param("recon.b", 1, cfg.patch_len());
}

void ModelParams::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  auto trunc_normal_fill = [&](ad::Param& p) {
    for (auto& v : p.value) {
      double z;
      do {
        z = normal(rng);
      } while (std::abs(z) > 0.04);  // truncate at 2 sigma
      v = z;
    }
  };
  auto ones = [](ad::Param& p) { std::fill(p.value.begin(), p.value.end(), 1.0); };
  auto zeros = [](ad::Param& p) { std::fill(p.value.begin(), p.value.end(), 0.0); };

  ones(bn_gamma);
  zeros(bn_beta);
  bn_run_mean.assign(2, 0.0);
  bn_run_var.assign(2, 1.0);
  trunc_normal_fill(w_proj);
  zeros(b_proj);
  for (auto* blocks : {&enc, &dec})
    for (auto& b : *blocks) {
      ones(b.ln1_g);
      zeros(b.ln1_b);
      trunc_normal_fill(b.wq);
      zeros(b.bq);
      trunc_normal_fill(b.wk);
      zeros(b.bk);
      trunc_normal_fill(b.wv);
      zeros(b.bv);
      trunc_normal_fill(b.wo);
      zeros(b.bo);
      ones(b.ln2_g);
      zeros(b.ln2_b);
      trunc_normal_fill(b.w1);
      zeros(b.b1);
      trunc_normal_fill(b.w2);
      zeros(b.b2);
    }
  trunc_normal_fill(w_recon);
  zeros(b_recon);
}

std::vector<ad::Param*> ModelParams::trainable() {
  std::vector<ad::Param*> out{&bn_gamma, &bn_beta, &w_proj, &b_proj};
  for (auto* blocks : {&enc, &dec})
    for (auto& b : *blocks)
      for (ad::Param* p : {&b.ln1_g, &b.ln1_b, &b.wq, &b.bq, &b.wk, &b.bk,
                           &b.wv, &b.bv, &b.wo, &b.bo, &b.ln2_g, &b.ln2_b,
                           &b.w1, &b.b1, &b.w2, &b.b2})
        out.push_back(p);
  out.push_back(&w_recon);
  out.push_back(&b_recon);
  return out;
}

std::size_t ModelParams::param_count() {
  std::size_t n = 0;
  for (const auto* p : trainable()) n += p->value.size();
  return n;
}

void ModelParams::zero_grads() {
  for (auto* p : trainable()) p->zero_grad();
}

std::vector<double> positional_encoding(std::size_t nt, std::size_t nf,
                                        std::size_t dim) {
  if (dim % 4 != 0)
    throw std::invalid_argument("positional_encoding: dim must be 4k");
  const std::size_t n = nt * nf;
  const std::size_t half = dim / 2;
  std::vector<double> pe(n * dim, 0.0);
  auto ladder = [half](double pos, double* dst) {
    for (std::size_t i = 0; i < half / 2; ++i) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                static_cast<double>(half));
      dst[2 * i] = std::sin(pos * freq);
      dst[2 * i + 1] = std::cos(pos * freq);
    }
  };
  for (std::size_t tb = 0; tb < nt; ++tb)
    for (std::size_t fb = 0; fb < nf; ++fb) {
      double* row = pe.data() + (tb * nf + fb) * dim;
      ladder(static_cast<double>(tb), row);
      ladder(static_cast<double>(fb), row + half);
    }
  return pe;
}

namespace {

void check_finite(const ad::Tape& tape, ad::Tape::Var v, const char* stage) {
  for (double x : tape.val(v))
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("model forward: non-finite value "
                                           "at stage ") +
                               stage);
}

ad::Tape::Var transformer_block(ad::Tape& tape, ad::Tape::Var x,
                                BlockParams& b, std::size_t heads) {
  using Var = ad::Tape::Var;
  const std::size_t d = tape.cols(x);
  const std::size_t dh = d / heads;

  Var h = tape.layernorm_rows(x, tape.param(b.ln1_g), tape.param(b.ln1_b));
  Var q = tape.add_rowvec(tape.matmul(h, tape.param(b.wq)), tape.param(b.bq));
  Var k = tape.add_rowvec(tape.matmul(h, tape.param(b.wk)), tape.param(b.bk));
  Var v = tape.add_rowvec(tape.matmul(h, tape.param(b.wv)), tape.param(b.bv));
  std::vector<Var> head_out;
  head_out.reserve(heads);
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t i = 0; i < heads; ++i) {
    Var qi = tape.slice_cols(q, i * dh, dh);
    Var ki = tape.slice_cols(k, i * dh, dh);
    Var vi = tape.slice_cols(v, i * dh, dh);
    Var scores = tape.scale(tape.matmul(qi, ki, false, true), inv_sqrt_dh);
    Var attn = tape.softmax_rows(scores);
    head_out.push_back(tape.matmul(attn, vi));
  }
  Var merged = tape.concat_cols(head_out);
  Var attn_out = tape.add_rowvec(tape.matmul(merged, tape.param(b.wo)),
                                 tape.param(b.bo));
  x = tape.add(x, attn_out);

  Var h2 = tape.layernorm_rows(x, tape.param(b.ln2_g), tape.param(b.ln2_b));
  Var m = tape.gelu(
      tape.add_rowvec(tape.matmul(h2, tape.param(b.w1)), tape.param(b.b1)));
  Var m2 = tape.add_rowvec(tape.matmul(m, tape.param(b.w2)), tape.param(b.b2));
  return tape.add(x, m2);
}

}  // namespace

ForwardVars forward_graph(ad::Tape& tape, const dsp::MagPhaseTensor& x,
                          ModelParams& params, bool training,
                          bool update_running) {
  using Var = ad::Tape::Var;
  const auto& cfg = params.cfg;
  if (x.n_frames != cfg.t || x.n_bins != cfg.f)
    throw std::invalid_argument("forward: input grid does not match config");
  const std::size_t m = cfg.t * cfg.f;

  std::vector<double> in(2 * m);
  std::copy(x.mag.begin(), x.mag.end(), in.begin());
  std::copy(x.phase.begin(), x.phase.end(), in.begin() + m);
  Var input = tape.constant(std::move(in), 2, m);
  check_finite(tape, input, "input");

  Var bn = tape.channel_norm(input, tape.param(params.bn_gamma),
                             tape.param(params.bn_beta), params.bn_run_mean,
                             params.bn_run_var, training, update_running);
  check_finite(tape, bn, "channel_norm");

  Var patches = tape.unfold2ch(bn, cfg.t, cfg.f, cfg.pad_t(), cfg.pad_f(),
                               cfg.patch);
  Var tokens = tape.add_rowvec(tape.matmul(patches, tape.param(params.w_proj)),
                               tape.param(params.b_proj));
  Var pe = tape.constant(
      positional_encoding(cfg.pad_t() / cfg.patch, cfg.pad_f() / cfg.patch,
                          cfg.dim),
      cfg.n_patches(), cfg.dim);
  tokens = tape.add(tokens, pe);
  check_finite(tape, tokens, "projection");

  for (std::size_t i = 0; i < params.enc.size(); ++i) {
    tokens = transformer_block(tape, tokens, params.enc[i], cfg.heads);
    check_finite(tape, tokens, "encoder block");
  }
  for (std::size_t i = 0; i < params.dec.size(); ++i) {
    tokens = transformer_block(tape, tokens, params.dec[i], cfg.heads);
    check_finite(tape, tokens, "decoder block");
  }

  Var recon = tape.add_rowvec(tape.matmul(tokens, tape.param(params.w_recon)),
                              tape.param(params.b_recon));
  Var folded = tape.fold2ch(recon, cfg.t, cfg.f, cfg.pad_t(), cfg.pad_f(),
                            cfg.patch);
  check_finite(tape, folded, "reconstruction head");

  ForwardVars out;
  out.mag = tape.softplus(tape.slice_rows(folded, 0, 1));
  out.phase = tape.wrap_phase(tape.slice_rows(folded, 1, 1));
  return out;
}

dsp::MagPhaseTensor forward(const dsp::MagPhaseTensor& x, ModelParams& params,
                            bool training) {
  ad::Tape tape;
  auto vars = forward_graph(tape, x, params, training, training);
  dsp::MagPhaseTensor out;
  out.n_frames = x.n_frames;
  out.n_bins = x.n_bins;
  out.mag = tape.val(vars.mag);
  out.phase = tape.val(vars.phase);
  return out;
}

}  // namespace rfx::model
