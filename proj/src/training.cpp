#include "pr/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>

#include "pr/rng.hpp"
#include "pr/transforms.hpp"

namespace pr {

LossResult training_loss(const Signal& estimate, const Signal& reference) {
  if (estimate.length() != reference.length()) {
    throw std::invalid_argument("training_loss: signals differ in length");
  }
  const Vec& est = estimate.samples;
  const Vec& ref = reference.samples;
  const double ref_energy = ref.squaredNorm();
  if (ref_energy == 0.0) {
    throw std::invalid_argument("training_loss: zero reference signal");
  }

  const double alpha = est.dot(ref) / ref_energy;
  const double target_energy = alpha * alpha * ref_energy;
  const Vec err = est - alpha * ref;
  const double err_energy = err.squaredNorm();

  // SI-SDR >= 60 dB counts as perfect: flat loss, zero gradient.
  if (err_energy <= 1e-6 * target_energy) {
    return {-60.0, Vec::Zero(est.size())};
  }
  if (target_energy == 0.0) {
    // Estimate orthogonal to the reference; infinitely bad fit. Reported
    // as-is so the training loop can abort with a diagnostic.
    return {std::numeric_limits<double>::infinity(), Vec::Zero(est.size())};
  }

  const double si_sdr = 10.0 * std::log10(target_energy / err_energy);
  const double loss = -si_sdr;
  if (loss <= -60.0) {
    return {-60.0, Vec::Zero(est.size())};
  }
  // d(-10 log10(N/D))/d est = (20/ln 10) (err/D - alpha ref/N); the cross
  // term vanishes because err is orthogonal to ref by construction.
  const double c = 20.0 / std::log(10.0);
  Vec grad = c * (err / err_energy - (alpha / target_energy) * ref);
  return {loss, std::move(grad)};
}

void adam_update(Vec& params, const Vec& grads, AdamState& state,
                 const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_update: shape mismatch");
  }
  if (state.m.size() != params.size()) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
    state.step = 0;
  }
  state.step += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.learning_rate * (state.m.array() / bias1) /
                    ((state.v.array() / bias2).sqrt() + cfg.epsilon);
}

namespace {

// Keeps beta strictly outside the guard band around 1.
void project_beta(UnfoldedModel& m, Vec& params) {
  const int stride = m.params_per_block();
  bool touched = false;
  for (int b = 0; b < m.blocks(); ++b) {
    double& beta = params[static_cast<long>(b) * stride + 2 * m.C + 2];
    const double d = beta - 1.0;
    if (std::abs(d) < kBetaGuard) {
      beta = 1.0 + std::copysign(kBetaGuard * (1.0 + 1e-9), d == 0.0 ? 1.0 : d);
      touched = true;
    }
  }
  if (touched) {
    m.unpack(params);
  }
}

struct PreparedSignal {
  Signal reference;
  Measurements r;
  Signal x0;
};

PreparedSignal prepare(const Signal& ref, const StftConfig& cfg,
                       std::uint64_t phase_seed,
                       std::map<long, std::unique_ptr<StftOperator>>& ops) {
  auto& op = ops[ref.length()];
  if (!op) {
    op = std::make_unique<StftOperator>(cfg, ref.length(), ref.sample_rate);
  }
  PreparedSignal out;
  out.reference = ref;
  out.r = Measurements{op->magnitudes(ref.samples)};
  Rng rng(phase_seed);
  const Vec phi = rng.phases(out.r.r.size());
  CVec init(phi.size());
  for (long k = 0; k < phi.size(); ++k) {
    init[k] = Cplx(std::cos(phi[k]), std::sin(phi[k]));
  }
  out.x0 = Signal{op->adjoint(cmul(out.r.r, init)), ref.sample_rate};
  return out;
}

double mean_loss(const UnfoldedModel& m, const std::vector<PreparedSignal>& set,
                 const StftConfig& cfg) {
  double acc = 0.0;
  for (const PreparedSignal& ps : set) {
    const UadmmOutput out = uadmm_forward(m, ps.r, ps.x0, CVec(), cfg);
    acc += training_loss(out.x, ps.reference).value;
  }
  return acc / static_cast<double>(set.size());
}

}  // namespace

TrainHistory train(UnfoldedModel& model, const std::vector<Signal>& train_set,
                   const std::vector<Signal>& val_set, const StftConfig& cfg,
                   const TrainConfig& tc) {
  model.validate();
  if (train_set.empty() || val_set.empty()) {
    throw ValidationError("train: training and validation sets must be nonempty");
  }
  if (tc.batch_size < 1 || tc.max_epochs < 0 || tc.patience < 1) {
    throw ValidationError("train: batch_size and patience must be >= 1, max_epochs >= 0");
  }

  std::map<long, std::unique_ptr<StftOperator>> ops;
  std::vector<PreparedSignal> train_ps, val_ps;
  train_ps.reserve(train_set.size());
  val_ps.reserve(val_set.size());
  for (size_t i = 0; i < train_set.size(); ++i) {
    train_ps.push_back(prepare(train_set[i], cfg,
                               derive_seed(tc.seed, "train-phase", i), ops));
  }
  for (size_t i = 0; i < val_set.size(); ++i) {
    val_ps.push_back(
        prepare(val_set[i], cfg, derive_seed(tc.seed, "val-phase", i), ops));
  }

  Vec params = model.pack();
  AdamState adam;
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = tc.learning_rate;

  TrainHistory history;
  EpochStats init_stats{mean_loss(model, train_ps, cfg),
                        mean_loss(model, val_ps, cfg)};
  history.epochs.push_back(init_stats);
  history.best_epoch = 0;
  history.best_val_loss = init_stats.val_loss;
  Vec best_params = params;
  int epochs_since_best = 0;

  std::vector<size_t> order(train_ps.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    // Deterministic reshuffle each epoch.
    Rng shuffle_rng(derive_seed(tc.seed, "epoch-order", epoch));
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = shuffle_rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t batch_end =
          std::min(pos + static_cast<size_t>(tc.batch_size), order.size());
      Vec grad_sum = Vec::Zero(params.size());
      double batch_loss = 0.0;
      for (size_t i = pos; i < batch_end; ++i) {
        const PreparedSignal& ps = train_ps[order[i]];
        Tape tape;
        const UadmmOutput out = uadmm_forward(model, ps.r, ps.x0, CVec(), cfg, &tape);
        const LossResult loss = training_loss(out.x, ps.reference);
        if (!std::isfinite(loss.value)) {
          throw std::runtime_error(
              "train: non-finite loss at epoch " + std::to_string(epoch) +
              ", signal " + std::to_string(order[i]));
        }
        batch_loss += loss.value;
        grad_sum += uadmm_backward(model, tape, loss.grad);
      }
      const double n = static_cast<double>(batch_end - pos);
      epoch_loss += batch_loss;
      const Vec grad_mean = grad_sum / n;
      adam_update(params, grad_mean, adam, adam_cfg);
      project_beta(model, params);
      model.unpack(params);
      pos = batch_end;
    }
    epoch_loss /= static_cast<double>(train_ps.size());

    const double val_loss = mean_loss(model, val_ps, cfg);
    if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
      throw std::runtime_error("train: non-finite loss at epoch " +
                               std::to_string(epoch));
    }
    history.epochs.push_back(EpochStats{epoch_loss, val_loss});

    if (val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      best_params = params;
      epochs_since_best = 0;
    } else {
      epochs_since_best += 1;
      if (epochs_since_best >= tc.patience) {
        history.stopped_early = true;
        break;
      }
    }
  }

  model.unpack(best_params);
  return history;
}

}  // namespace pr
