#pragma once

#include <cstdint>
#include <vector>

#include "pr/types.hpp"
#include "pr/unfolded.hpp"

namespace pr {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 10;
  int max_epochs = 200;
  int patience = 10;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
};

struct LossResult {
  double value = 0.0;
  Vec grad;  // with respect to the estimate
};

// Negative scale-invariant SDR with the loss floored at -60 dB (zero
// gradient on the floor, which bounds gradients near perfect
// reconstruction). Throws on a zero reference or length mismatch.
LossResult training_loss(const Signal& estimate, const Signal& reference);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  long step = 0;
};

// Standard bias-corrected ADAM step, in place.
void adam_update(Vec& params, const Vec& grads, AdamState& state,
                 const AdamConfig& cfg);

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  // epochs[0] holds the pre-training evaluation; epochs[e] the state after
  // epoch e.
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

// Minibatch training of the unfolded model against ground-truth signals.
// Per signal, a fixed random-uniform phase (derived from the seed and the
// signal index) builds x0 = A^H(r e^{i phi}) with lambda0 = 0. Gradients are
// batch means; after every step beta is projected outside the guard band
// around 1. Early-stops on the validation loss and restores the best
// parameters. Throws on non-finite losses.
TrainHistory train(UnfoldedModel& model, const std::vector<Signal>& train_set,
                   const std::vector<Signal>& val_set, const StftConfig& cfg,
                   const TrainConfig& tc);

}  // namespace pr
