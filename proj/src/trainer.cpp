#include "rfx/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "rfx/io.hpp"
#include "rfx/kernels.hpp"

namespace rfx::train {

void TrainConfig::validate() const {
  if (lr < 0.0) throw std::invalid_argument("train: lr must be >= 0");
  if (clip_norm <= 0.0)
    throw std::invalid_argument("train: clip_norm must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("train: betas must lie in [0, 1)");
  if (batch_size == 0)
    throw std::invalid_argument("train: batch_size must be >= 1");
}

void AdamState::ensure(const std::vector<ad::Param*>& params) {
  if (!m.empty()) return;
  m.resize(params.size());
  v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i].assign(params[i]->value.size(), 0.0);
    v[i].assign(params[i]->value.size(), 0.0);
  }
}

void optimizer_step(const std::vector<ad::Param*>& params, AdamState& state,
                    const TrainConfig& cfg) {
  state.ensure(params);
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->value;
    const auto& grad = params[i]->grad;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = grad[j];
      if (!std::isfinite(gj))
        throw NumericAbort("optimizer_step: non-finite gradient in " +
                           params[i]->name);
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps) +
              cfg.lr * cfg.weight_decay * p[j];
    }
  }
}

double clip_global_norm(const std::vector<ad::Param*>& params,
                        double clip_norm) {
  double total = 0.0;
  for (const auto* p : params)
    total += kern::sumsq(p->grad.data(), p->grad.size());
  const double norm = std::sqrt(total);
  if (norm > clip_norm) {
    const double s = clip_norm / norm;
    for (auto* p : params) kern::scale(s, p->grad.data(), p->grad.size());
  }
  return norm;
}

namespace {

struct Sample {
  dsp::MagPhaseTensor low;
  dsp::MagPhaseTensor high;
};

Sample make_sample(const sim::RfPair& pair, const dsp::StftConfig& cfg,
                   double fs) {
  Sample s;
  s.low = dsp::to_polar(dsp::stft(pair.low.samples, cfg, fs));
  s.high = dsp::to_polar(dsp::stft(pair.high.samples, cfg, fs));
  return s;
}

// Composite loss on a tape; terms come back through `out_terms`.
ad::Tape::Var sample_loss(ad::Tape& tape, model::ForwardVars pred,
                          const dsp::MagPhaseTensor& target,
                          const loss::CurriculumState& cur,
                          loss::LossTerms& out_terms) {
  const std::size_t m = target.mag.size();
  ad::Tape::Var tgt_mag = tape.constant(target.mag, 1, m);
  ad::Tape::Var tgt_phase = tape.constant(target.phase, 1, m);
  ad::Tape::Var l_mag = tape.mse(pred.mag, tgt_mag);
  ad::Tape::Var l_phase;
  if (cur.circular_phase) {
    // Distance on the circle: wrap the difference, then square. The wrap
    // keeps every bin's gradient pointed at its nearest phase match instead
    // of across the +-pi seam.
    ad::Tape::Var diff = tape.wrap_phase(tape.sub(pred.phase, tgt_phase));
    l_phase = tape.mse(diff, tape.constant(std::vector<double>(m, 0.0), 1, m));
  } else {
    l_phase = tape.mse(pred.phase, tgt_phase);
  }
  ad::Tape::Var l_cplx =
      tape.complex_mse(pred.mag, pred.phase, tgt_mag, tgt_phase);
  out_terms = {tape.scalar(l_mag), tape.scalar(l_phase), tape.scalar(l_cplx)};
  return tape.weighted_sum({l_mag, l_phase, l_cplx},
                           {cur.w_mag, cur.w_phase, cur.w_cplx});
}

}  // namespace

TrainReport train(const sim::PairedDataset& dataset,
                  const dsp::StftConfig& stft_cfg, model::ModelParams& params,
                  loss::CurriculumState& curriculum, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.pairs.empty())
    throw std::invalid_argument("train: empty dataset");

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    if (dataset.split[i] == sim::Split::val)
      val_idx.push_back(i);
    else if (dataset.split[i] == sim::Split::train)
      train_idx.push_back(i);
  }
  if (train_idx.empty())
    throw std::invalid_argument("train: no training pairs");

  auto trainables = params.trainable();
  AdamState opt;
  TrainReport report;

  std::ofstream log;
  if (!cfg.log_csv_path.empty()) {
    log.open(cfg.log_csv_path, std::ios::trunc);
    log.precision(17);  // round-trippable doubles
    log << "epoch,l_mag,l_phase,l_cplx,composite,lambda_mag,lambda_phase,"
           "lambda_cplx,ema_mag,ema_phase,val_composite,max_grad_norm\n";
  }

  const double fs = dataset.probe.fs;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Deterministic per-epoch shuffle.
    std::vector<std::size_t> order = train_idx;
    std::mt19937_64 rng(cfg.seed * 1000003u + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    double sum_mag = 0.0, sum_phase = 0.0, sum_cplx = 0.0, sum_comp = 0.0;
    std::size_t n_seen = 0;

    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + cfg.batch_size);
      params.zero_grads();
      for (std::size_t bi = start; bi < end; ++bi) {
        const Sample s =
            make_sample(dataset.pairs[order[bi]], stft_cfg, fs);
        ad::Tape tape;
        model::ForwardVars pred;
        loss::LossTerms terms;
        double comp;
        try {
          pred = model::forward_graph(tape, s.low, params, true, true);
          auto loss_var = sample_loss(tape, pred, s.high, curriculum, terms);
          comp = tape.scalar(loss_var);
          if (!std::isfinite(comp)) throw NumericAbort("train: NaN loss");
          tape.backward(loss_var);
        } catch (const std::runtime_error& e) {
          throw NumericAbort(std::string("train: aborted at epoch ") +
                             std::to_string(epoch) + ": " + e.what());
        }
        sum_mag += terms.mag;
        sum_phase += terms.phase;
        sum_cplx += terms.cplx;
        sum_comp += comp;
        ++n_seen;
      }
      // Mean gradient over the batch, then clip and step.
      const double inv_b = 1.0 / static_cast<double>(end - start);
      for (auto* p : trainables)
        kern::scale(inv_b, p->grad.data(), p->grad.size());
      const double pre = clip_global_norm(trainables, cfg.clip_norm);
      rec.max_grad_norm = std::max(rec.max_grad_norm,
                                   std::min(pre, cfg.clip_norm));
      optimizer_step(trainables, opt, cfg);
    }

    rec.mean_mag = sum_mag / static_cast<double>(n_seen);
    rec.mean_phase = sum_phase / static_cast<double>(n_seen);
    rec.mean_cplx = sum_cplx / static_cast<double>(n_seen);
    rec.mean_composite = sum_comp / static_cast<double>(n_seen);

    loss::update_weights(curriculum, rec.mean_mag, rec.mean_phase);
    rec.w_mag = curriculum.w_mag;
    rec.w_phase = curriculum.w_phase;
    rec.w_cplx = curriculum.w_cplx;
    rec.ema_mag = curriculum.ema_mag;
    rec.ema_phase = curriculum.ema_phase;

    // Validation pass: inference mode, no parameter or stat updates.
    if (!val_idx.empty()) {
      double vsum = 0.0;
      for (std::size_t i : val_idx) {
        const Sample s = make_sample(dataset.pairs[i], stft_cfg, fs);
        ad::Tape tape;
        auto pred = model::forward_graph(tape, s.low, params, false, false);
        loss::LossTerms terms;
        sample_loss(tape, pred, s.high, curriculum, terms);
        vsum += loss::composite_loss(terms, curriculum);
      }
      rec.val_composite = vsum / static_cast<double>(val_idx.size());
    } else {
      rec.val_composite = std::nan("");
    }

    rec.wall_s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    report.epochs.push_back(rec);

    if (log.is_open()) {
      log << rec.epoch << ',' << rec.mean_mag << ',' << rec.mean_phase << ','
          << rec.mean_cplx << ',' << rec.mean_composite << ',' << rec.w_mag
          << ',' << rec.w_phase << ',' << rec.w_cplx << ',' << rec.ema_mag
          << ',' << rec.ema_phase << ',' << rec.val_composite << ','
          << rec.max_grad_norm << '\n';
      log.flush();
    }
    if (!cfg.checkpoint_path.empty() &&
        ((epoch + 1) % cfg.checkpoint_every == 0 ||
         epoch + 1 == cfg.epochs)) {
      io::save_checkpoint(params, cfg.checkpoint_path,
                          io::json{{"epoch", epoch}});
    }
  }
  return report;
}

}  // namespace rfx::train
