#include "rfx/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "rfx/kernels.hpp"

namespace rfx::ad {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tape::Var Tape::make(std::size_t r, std::size_t c) {
  vals_.emplace_back(r * c, 0.0);
  rows_.push_back(r);
  cols_.push_back(c);
  backs_.emplace_back();
  return static_cast<Var>(vals_.size() - 1);
}

Tape::Var Tape::constant(std::vector<double> v, std::size_t r, std::size_t c) {
  if (v.size() != r * c) throw std::invalid_argument("constant: size mismatch");
  Var id = make(r, c);
  vals_[id] = std::move(v);
  return id;
}

Tape::Var Tape::param(Param& p) {
  Var id = make(p.rows, p.cols);
  vals_[id] = p.value;
  Param* pp = &p;
  backs_[id] = [this, id, pp] {
    kern::axpy(1.0, grads_[id].data(), pp->grad.data(), pp->grad.size());
  };
  return id;
}

Tape::Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const std::size_t m = trans_a ? cols_[a] : rows_[a];
  const std::size_t k = trans_a ? rows_[a] : cols_[a];
  const std::size_t kb = trans_b ? cols_[b] : rows_[b];
  const std::size_t n = trans_b ? rows_[b] : cols_[b];
  if (k != kb) throw std::invalid_argument("matmul: inner dim mismatch");
  Var out = make(m, n);
  kern::gemm(trans_a, trans_b, m, n, k, 1.0, vals_[a].data(), cols_[a],
             vals_[b].data(), cols_[b], 0.0, vals_[out].data(), n);
  backs_[out] = [this, a, b, out, trans_a, trans_b, m, n, k] {
    const double* dc = grads_[out].data();
    // dA
    if (!trans_a) {
      kern::gemm(false, !trans_b, m, k, n, 1.0, dc, n, vals_[b].data(),
                 cols_[b], 1.0, grads_[a].data(), cols_[a]);
    } else {
      kern::gemm(trans_b, true, k, m, n, 1.0, vals_[b].data(), cols_[b], dc,
                 n, 1.0, grads_[a].data(), cols_[a]);
    }
    // dB
    if (!trans_b) {
      kern::gemm(!trans_a, false, k, n, m, 1.0, vals_[a].data(), cols_[a], dc,
                 n, 1.0, grads_[b].data(), cols_[b]);
    } else {
      kern::gemm(true, trans_a, n, k, m, 1.0, dc, n, vals_[a].data(), cols_[a],
                 1.0, grads_[b].data(), cols_[b]);
    }
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  if (vals_[a].size() != vals_[b].size())
    throw std::invalid_argument("add: shape mismatch");
  Var out = make(rows_[a], cols_[a]);
  kern::add(vals_[a].data(), vals_[b].data(), vals_[out].data(),
            vals_[a].size());
  backs_[out] = [this, a, b, out] {
    kern::axpy(1.0, grads_[out].data(), grads_[a].data(), grads_[a].size());
    kern::axpy(1.0, grads_[out].data(), grads_[b].data(), grads_[b].size());
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  if (vals_[a].size() != vals_[b].size())
    throw std::invalid_argument("sub: shape mismatch");
  Var out = make(rows_[a], cols_[a]);
  for (std::size_t i = 0; i < vals_[a].size(); ++i)
    vals_[out][i] = vals_[a][i] - vals_[b][i];
  backs_[out] = [this, a, b, out] {
    kern::axpy(1.0, grads_[out].data(), grads_[a].data(), grads_[a].size());
    kern::axpy(-1.0, grads_[out].data(), grads_[b].data(), grads_[b].size());
  };
  return out;
}

Tape::Var Tape::hadamard(Var a, Var b) {
  if (vals_[a].size() != vals_[b].size())
    throw std::invalid_argument("hadamard: shape mismatch");
  Var out = make(rows_[a], cols_[a]);
  kern::mul(vals_[a].data(), vals_[b].data(), vals_[out].data(),
            vals_[a].size());
  backs_[out] = [this, a, b, out] {
    const auto n = vals_[a].size();
    for (std::size_t i = 0; i < n; ++i) {
      grads_[a][i] += grads_[out][i] * vals_[b][i];
      grads_[b][i] += grads_[out][i] * vals_[a][i];
    }
  };
  return out;
}

Tape::Var Tape::scale(Var a, double alpha) {
  Var out = make(rows_[a], cols_[a]);
  vals_[out] = vals_[a];
  kern::scale(alpha, vals_[out].data(), vals_[out].size());
  backs_[out] = [this, a, out, alpha] {
    kern::axpy(alpha, grads_[out].data(), grads_[a].data(), grads_[a].size());
  };
  return out;
}

Tape::Var Tape::add_rowvec(Var a, Var bias) {
  const std::size_t r = rows_[a], c = cols_[a];
  if (rows_[bias] != 1 || cols_[bias] != c)
    throw std::invalid_argument("add_rowvec: bias must be 1 x cols");
  Var out = make(r, c);
  for (std::size_t i = 0; i < r; ++i)
    kern::add(vals_[a].data() + i * c, vals_[bias].data(),
              vals_[out].data() + i * c, c);
  backs_[out] = [this, a, bias, out, r, c] {
    kern::axpy(1.0, grads_[out].data(), grads_[a].data(), r * c);
    for (std::size_t i = 0; i < r; ++i)
      kern::axpy(1.0, grads_[out].data() + i * c, grads_[bias].data(), c);
  };
  return out;
}

Tape::Var Tape::slice_cols(Var a, std::size_t c0, std::size_t width) {
  const std::size_t r = rows_[a], c = cols_[a];
  if (c0 + width > c) throw std::invalid_argument("slice_cols: out of range");
  Var out = make(r, width);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < width; ++j)
      vals_[out][i * width + j] = vals_[a][i * c + c0 + j];
  backs_[out] = [this, a, out, c0, width, r, c] {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < width; ++j)
        grads_[a][i * c + c0 + j] += grads_[out][i * width + j];
  };
  return out;
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const std::size_t r = rows_[parts[0]];
  std::size_t c = 0;
  for (Var p : parts) {
    if (rows_[p] != r) throw std::invalid_argument("concat_cols: row mismatch");
    c += cols_[p];
  }
  Var out = make(r, c);
  std::size_t off = 0;
  for (Var p : parts) {
    const std::size_t w = cols_[p];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j)
        vals_[out][i * c + off + j] = vals_[p][i * w + j];
    off += w;
  }
  auto parts_copy = parts;
  backs_[out] = [this, parts_copy, out, r, c] {
    std::size_t o = 0;
    for (Var p : parts_copy) {
      const std::size_t w = cols_[p];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j)
          grads_[p][i * w + j] += grads_[out][i * c + o + j];
      o += w;
    }
  };
  return out;
}

Tape::Var Tape::slice_rows(Var a, std::size_t r0, std::size_t nrows) {
  const std::size_t c = cols_[a];
  if (r0 + nrows > rows_[a])
    throw std::invalid_argument("slice_rows: out of range");
  Var out = make(nrows, c);
  std::copy(vals_[a].begin() + r0 * c, vals_[a].begin() + (r0 + nrows) * c,
            vals_[out].begin());
  backs_[out] = [this, a, out, r0, nrows, c] {
    kern::axpy(1.0, grads_[out].data(), grads_[a].data() + r0 * c, nrows * c);
  };
  return out;
}

Tape::Var Tape::gelu(Var a) {
  Var out = make(rows_[a], cols_[a]);
  for (std::size_t i = 0; i < vals_[a].size(); ++i) {
    const double x = vals_[a][i];
    vals_[out][i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  backs_[out] = [this, a, out] {
    for (std::size_t i = 0; i < vals_[a].size(); ++i) {
      const double x = vals_[a][i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      grads_[a][i] += grads_[out][i] * (cdf + x * pdf);
    }
  };
  return out;
}

Tape::Var Tape::softplus(Var a) {
  Var out = make(rows_[a], cols_[a]);
  for (std::size_t i = 0; i < vals_[a].size(); ++i) {
    const double x = vals_[a][i];
    vals_[out][i] = x > 30.0 ? x : std::log1p(std::exp(x));
  }
  backs_[out] = [this, a, out] {
    for (std::size_t i = 0; i < vals_[a].size(); ++i) {
      const double x = vals_[a][i];
      const double sig = 1.0 / (1.0 + std::exp(-x));
      grads_[a][i] += grads_[out][i] * sig;
    }
  };
  return out;
}

Tape::Var Tape::softmax_rows(Var a) {
  const std::size_t r = rows_[a], c = cols_[a];
  Var out = make(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = vals_[a].data() + i * c;
    double* y = vals_[out].data() + i * c;
    double mx = x[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - mx);
      s += y[j];
    }
    kern::scale(1.0 / s, y, c);
  }
  backs_[out] = [this, a, out, r, c] {
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = vals_[out].data() + i * c;
      const double* dy = grads_[out].data() + i * c;
      double dotv = kern::dot(dy, y, c);
      double* dx = grads_[a].data() + i * c;
      for (std::size_t j = 0; j < c; ++j) dx[j] += y[j] * (dy[j] - dotv);
    }
  };
  return out;
}

Tape::Var Tape::wrap_phase(Var a) {
  Var out = make(rows_[a], cols_[a]);
  for (std::size_t i = 0; i < vals_[a].size(); ++i)
    vals_[out][i] = std::atan2(std::sin(vals_[a][i]), std::cos(vals_[a][i]));
  backs_[out] = [this, a, out] {
    kern::axpy(1.0, grads_[out].data(), grads_[a].data(), grads_[a].size());
  };
  return out;
}

Tape::Var Tape::layernorm_rows(Var a, Var gamma, Var beta, double eps) {
  const std::size_t r = rows_[a], c = cols_[a];
  if (cols_[gamma] != c || cols_[beta] != c)
    throw std::invalid_argument("layernorm: affine shape mismatch");
  Var out = make(r, c);
  // Cache normalized values and inverse std per row for backward.
  auto xhat = std::make_shared<std::vector<double>>(r * c);
  auto inv_std = std::make_shared<std::vector<double>>(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = vals_[a].data() + i * c;
    const double mean = kern::sum(x, c) / static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double istd = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = istd;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (x[j] - mean) * istd;
      (*xhat)[i * c + j] = xh;
      vals_[out][i * c + j] = vals_[gamma][j] * xh + vals_[beta][j];
    }
  }
  backs_[out] = [this, a, gamma, beta, out, r, c, xhat, inv_std] {
    for (std::size_t i = 0; i < r; ++i) {
      const double* dy = grads_[out].data() + i * c;
      const double* xh = xhat->data() + i * c;
      double sum_dxh = 0.0, sum_dxh_xh = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        grads_[gamma][j] += dy[j] * xh[j];
        grads_[beta][j] += dy[j];
        const double dxh = dy[j] * vals_[gamma][j];
        sum_dxh += dxh;
        sum_dxh_xh += dxh * xh[j];
      }
      const double istd = (*inv_std)[i];
      const double inv_c = 1.0 / static_cast<double>(c);
      double* dx = grads_[a].data() + i * c;
      for (std::size_t j = 0; j < c; ++j) {
        const double dxh = dy[j] * vals_[gamma][j];
        dx[j] += istd * (dxh - inv_c * sum_dxh - xh[j] * inv_c * sum_dxh_xh);
      }
    }
  };
  return out;
}

Tape::Var Tape::channel_norm(Var a, Var gamma, Var beta,
                             std::vector<double>& run_mean,
                             std::vector<double>& run_var, bool training,
                             bool update_running, double momentum, double eps) {
  const std::size_t ch = rows_[a], m = cols_[a];
  if (vals_[gamma].size() != ch || vals_[beta].size() != ch ||
      run_mean.size() != ch || run_var.size() != ch)
    throw std::invalid_argument("channel_norm: per-channel shape mismatch");
  Var out = make(ch, m);

  if (!training) {
    for (std::size_t i = 0; i < ch; ++i) {
      const double istd = 1.0 / std::sqrt(run_var[i] + eps);
      const double g0 = vals_[gamma][i], b0 = vals_[beta][i], mu = run_mean[i];
      const double* x = vals_[a].data() + i * m;
      double* y = vals_[out].data() + i * m;
      for (std::size_t j = 0; j < m; ++j) y[j] = g0 * (x[j] - mu) * istd + b0;
    }
    auto istds = std::make_shared<std::vector<double>>(ch);
    auto mus = std::make_shared<std::vector<double>>(ch);
    for (std::size_t i = 0; i < ch; ++i) {
      (*istds)[i] = 1.0 / std::sqrt(run_var[i] + eps);
      (*mus)[i] = run_mean[i];
    }
    backs_[out] = [this, a, gamma, beta, out, ch, m, istds, mus] {
      for (std::size_t i = 0; i < ch; ++i) {
        const double* dy = grads_[out].data() + i * m;
        const double* x = vals_[a].data() + i * m;
        const double istd = (*istds)[i];
        double dg = 0.0, db = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          dg += dy[j] * (x[j] - (*mus)[i]) * istd;
          db += dy[j];
        }
        grads_[gamma][i] += dg;
        grads_[beta][i] += db;
        kern::axpy(vals_[gamma][i] * istd, dy, grads_[a].data() + i * m, m);
      }
    };
    return out;
  }

  auto xhat = std::make_shared<std::vector<double>>(ch * m);
  auto istds = std::make_shared<std::vector<double>>(ch);
  for (std::size_t i = 0; i < ch; ++i) {
    const double* x = vals_[a].data() + i * m;
    const double mean = kern::sum(x, m) / static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(m);
    const double istd = 1.0 / std::sqrt(var + eps);
    (*istds)[i] = istd;
    for (std::size_t j = 0; j < m; ++j) {
      const double xh = (x[j] - mean) * istd;
      (*xhat)[i * m + j] = xh;
      vals_[out][i * m + j] = vals_[gamma][i] * xh + vals_[beta][i];
    }
    if (update_running) {
      // Unbiased variance feeds the running estimate.
      const double var_unbiased =
          m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1)
                : var;
      run_mean[i] = (1.0 - momentum) * run_mean[i] + momentum * mean;
      run_var[i] = (1.0 - momentum) * run_var[i] + momentum * var_unbiased;
    }
  }
  backs_[out] = [this, a, gamma, beta, out, ch, m, xhat, istds] {
    for (std::size_t i = 0; i < ch; ++i) {
      const double* dy = grads_[out].data() + i * m;
      const double* xh = xhat->data() + i * m;
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        sum_dy += dy[j];
        sum_dy_xh += dy[j] * xh[j];
      }
      grads_[gamma][i] += sum_dy_xh;
      grads_[beta][i] += sum_dy;
      const double g0 = vals_[gamma][i];
      const double istd = (*istds)[i];
      const double inv_m = 1.0 / static_cast<double>(m);
      double* dx = grads_[a].data() + i * m;
      for (std::size_t j = 0; j < m; ++j)
        dx[j] += g0 * istd *
                 (dy[j] - inv_m * sum_dy - xh[j] * inv_m * sum_dy_xh);
    }
  };
  return out;
}

Tape::Var Tape::unfold2ch(Var a, std::size_t t, std::size_t f,
                          std::size_t pad_t, std::size_t pad_f,
                          std::size_t k) {
  if (rows_[a] != 2 || cols_[a] != t * f)
    throw std::invalid_argument("unfold2ch: expected 2 x (T*F) input");
  if (pad_t % k || pad_f % k || pad_t < t || pad_f < f)
    throw std::invalid_argument("unfold2ch: bad padded dims");
  const std::size_t nt = pad_t / k, nf = pad_f / k;
  const std::size_t n = nt * nf, pw = 2 * k * k;
  Var out = make(n, pw);
  for (std::size_t tb = 0; tb < nt; ++tb)
    for (std::size_t fb = 0; fb < nf; ++fb) {
      double* row = vals_[out].data() + (tb * nf + fb) * pw;
      for (std::size_t ch = 0; ch < 2; ++ch)
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t tt = tb * k + i, ff = fb * k + j;
            row[ch * k * k + i * k + j] =
                (tt < t && ff < f) ? vals_[a][ch * t * f + tt * f + ff] : 0.0;
          }
    }
  backs_[out] = [this, a, out, t, f, nt, nf, k, pw] {
    for (std::size_t tb = 0; tb < nt; ++tb)
      for (std::size_t fb = 0; fb < nf; ++fb) {
        const double* row = grads_[out].data() + (tb * nf + fb) * pw;
        for (std::size_t ch = 0; ch < 2; ++ch)
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              const std::size_t tt = tb * k + i, ff = fb * k + j;
              if (tt < t && ff < f)
                grads_[a][ch * t * f + tt * f + ff] +=
                    row[ch * k * k + i * k + j];
            }
      }
  };
  return out;
}

Tape::Var Tape::fold2ch(Var a, std::size_t t, std::size_t f, std::size_t pad_t,
                        std::size_t pad_f, std::size_t k) {
  const std::size_t nt = pad_t / k, nf = pad_f / k;
  const std::size_t pw = 2 * k * k;
  if (rows_[a] != nt * nf || cols_[a] != pw)
    throw std::invalid_argument("fold2ch: patch matrix shape mismatch");
  Var out = make(2, t * f);
  for (std::size_t tb = 0; tb < nt; ++tb)
    for (std::size_t fb = 0; fb < nf; ++fb) {
      const double* row = vals_[a].data() + (tb * nf + fb) * pw;
      for (std::size_t ch = 0; ch < 2; ++ch)
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t tt = tb * k + i, ff = fb * k + j;
            if (tt < t && ff < f)
              vals_[out][ch * t * f + tt * f + ff] = row[ch * k * k + i * k + j];
          }
    }
  backs_[out] = [this, a, out, t, f, nt, nf, k, pw] {
    for (std::size_t tb = 0; tb < nt; ++tb)
      for (std::size_t fb = 0; fb < nf; ++fb) {
        double* row = grads_[a].data() + (tb * nf + fb) * pw;
        for (std::size_t ch = 0; ch < 2; ++ch)
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              const std::size_t tt = tb * k + i, ff = fb * k + j;
              if (tt < t && ff < f)
                row[ch * k * k + i * k + j] +=
                    grads_[out][ch * t * f + tt * f + ff];
            }
      }
  };
  return out;
}

Tape::Var Tape::mse(Var a, Var b) {
  if (vals_[a].size() != vals_[b].size())
    throw std::invalid_argument("mse: shape mismatch");
  const std::size_t n = vals_[a].size();
  Var out = make(1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = vals_[a][i] - vals_[b][i];
    acc += d * d;
  }
  vals_[out][0] = acc / static_cast<double>(n);
  backs_[out] = [this, a, b, out, n] {
    const double s = 2.0 * grads_[out][0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = vals_[a][i] - vals_[b][i];
      grads_[a][i] += s * d;
      grads_[b][i] -= s * d;
    }
  };
  return out;
}

Tape::Var Tape::complex_mse(Var a_mag, Var a_phase, Var b_mag, Var b_phase) {
  const std::size_t n = vals_[a_mag].size();
  if (vals_[a_phase].size() != n || vals_[b_mag].size() != n ||
      vals_[b_phase].size() != n)
    throw std::invalid_argument("complex_mse: shape mismatch");
  Var out = make(1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ex = vals_[a_mag][i] * std::cos(vals_[a_phase][i]) -
                      vals_[b_mag][i] * std::cos(vals_[b_phase][i]);
    const double ey = vals_[a_mag][i] * std::sin(vals_[a_phase][i]) -
                      vals_[b_mag][i] * std::sin(vals_[b_phase][i]);
    acc += ex * ex + ey * ey;
  }
  vals_[out][0] = acc / static_cast<double>(n);
  backs_[out] = [this, a_mag, a_phase, b_mag, b_phase, out, n] {
    const double s = 2.0 * grads_[out][0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ca = std::cos(vals_[a_phase][i]);
      const double sa = std::sin(vals_[a_phase][i]);
      const double cb = std::cos(vals_[b_phase][i]);
      const double sb = std::sin(vals_[b_phase][i]);
      const double ex = vals_[a_mag][i] * ca - vals_[b_mag][i] * cb;
      const double ey = vals_[a_mag][i] * sa - vals_[b_mag][i] * sb;
      grads_[a_mag][i] += s * (ex * ca + ey * sa);
      grads_[a_phase][i] +=
          s * vals_[a_mag][i] * (-ex * sa + ey * ca);
      grads_[b_mag][i] -= s * (ex * cb + ey * sb);
      grads_[b_phase][i] -=
          s * vals_[b_mag][i] * (-ex * sb + ey * cb);
    }
  };
  return out;
}

Tape::Var Tape::weighted_sum(const std::vector<Var>& scalars,
                             const std::vector<double>& coeffs) {
  if (scalars.size() != coeffs.size())
    throw std::invalid_argument("weighted_sum: size mismatch");
  Var out = make(1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i)
    acc += coeffs[i] * vals_[scalars[i]][0];
  vals_[out][0] = acc;
  auto svars = scalars;
  auto cvec = coeffs;
  backs_[out] = [this, svars, cvec, out] {
    for (std::size_t i = 0; i < svars.size(); ++i)
      grads_[svars[i]][0] += cvec[i] * grads_[out][0];
  };
  return out;
}

void Tape::backward(Var loss) {
  if (rows_[loss] != 1 || cols_[loss] != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  grads_.resize(vals_.size());
  for (std::size_t i = 0; i < vals_.size(); ++i)
    grads_[i].assign(vals_[i].size(), 0.0);
  grads_[loss][0] = 1.0;
  for (std::size_t i = backs_.size(); i-- > 0;)
    if (backs_[i]) backs_[i]();
}

}  // namespace rfx::ad
