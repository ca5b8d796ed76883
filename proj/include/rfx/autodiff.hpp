#pragma once
// Tape-based reverse-mode automatic differentiation over row-major double
// matrices. The tape is rebuilt on every forward pass; backward walks it in
// reverse creation order. Gradients are additive across uses of a variable.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rfx::ad {

// A named trainable tensor. Gradients accumulate into `grad` until zeroed.
struct Param {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;
  std::size_t rows = 0, cols = 0;

  Param() = default;
  Param(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), value(r * c, 0.0), grad(r * c, 0.0), rows(r),
        cols(c) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape {
 public:
  using Var = int;

  // Leaves.
  Var constant(std::vector<double> v, std::size_t r, std::size_t c);
  Var param(Param& p);  // backward adds into p.grad

  const std::vector<double>& val(Var v) const { return vals_[v]; }
  const std::vector<double>& grad(Var v) const { return grads_[v]; }
  std::size_t rows(Var v) const { return rows_[v]; }
  std::size_t cols(Var v) const { return cols_[v]; }

  // Elementwise and linear-algebra ops.
  Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double alpha);
  Var add_rowvec(Var a, Var bias);  // bias 1 x c broadcast over rows
  Var slice_cols(Var a, std::size_t c0, std::size_t width);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, std::size_t r0, std::size_t nrows);

  // Nonlinearities.
  Var gelu(Var a);
  Var softplus(Var a);
  Var softmax_rows(Var a);
  // atan2(sin x, cos x): wraps values into (-pi, pi], unit gradient.
  Var wrap_phase(Var a);

  // Row-wise layer norm with per-column affine (gamma, beta are 1 x c).
  Var layernorm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);

  // Channel norm over each row of a C x M tensor (one row per channel),
  // batch-norm style with batch statistics in training mode and running
  // statistics in inference mode.
  Var channel_norm(Var a, Var gamma, Var beta, std::vector<double>& run_mean,
                   std::vector<double>& run_var, bool training,
                   bool update_running, double momentum = 0.1,
                   double eps = 1e-5);

  // 2-channel patch extraction: input 2 x (T*F), zero-padded to
  // (pad_t, pad_f), cut into k x k blocks; output N x (2*k*k) with rows in
  // (time-block, freq-block) row-major order, channel-major within a row.
  Var unfold2ch(Var a, std::size_t t, std::size_t f, std::size_t pad_t,
                std::size_t pad_f, std::size_t k);
  // Exact inverse (stride == kernel, coverage count 1): N x (2*k*k) back to
  // 2 x (T*F), discarding the padding region.
  Var fold2ch(Var a, std::size_t t, std::size_t f, std::size_t pad_t,
              std::size_t pad_f, std::size_t k);

  // Scalar reductions (1 x 1 results).
  Var mse(Var a, Var b);
  // mean |a_m e^{j a_p} - b_m e^{j b_p}|^2 over all elements.
  Var complex_mse(Var a_mag, Var a_phase, Var b_mag, Var b_phase);
  // sum_i coeffs[i] * scalars[i]
  Var weighted_sum(const std::vector<Var>& scalars,
                   const std::vector<double>& coeffs);

  double scalar(Var v) const { return vals_[v][0]; }

  void backward(Var loss);  // loss must be 1 x 1

 private:
  Var make(std::size_t r, std::size_t c);
  std::vector<double>& g(Var v) { return grads_[v]; }

  std::vector<std::vector<double>> vals_;
  std::vector<std::vector<double>> grads_;
  std::vector<std::size_t> rows_, cols_;
  std::vector<std::function<void()>> backs_;  // one per var, may be empty
};

}  // namespace rfx::ad
