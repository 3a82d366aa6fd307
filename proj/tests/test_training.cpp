#include <doctest.h>

#include <cmath>

#include "pr/synth.hpp"
#include "pr/training.hpp"
#include "testutil.hpp"

using namespace pr;
using prtest::exact_eq;

namespace {

const StftConfig kCfg = StftConfig::for_window(64);

UnfoldedModel trainable_init(int T, int C, bool tied, double rho,
                             double w_seed) {
  UnfoldedModel m = UnfoldedModel::quadratic_init(T, C, tied, rho);
  for (LayerParams& lp : m.layers) {
    lp.apl.w_tilde.setConstant(w_seed);
  }
  return m;
}

std::vector<Signal> clips(std::uint64_t seed, int count) {
  std::vector<Signal> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(make_speech_like(derive_seed(seed, "clip", i), 0.2, 8000));
  }
  return out;
}

}  // namespace

TEST_CASE("train: overfits a single signal") {
  const std::vector<Signal> data = clips(1, 1);
  UnfoldedModel m = trainable_init(5, 2, false, 1e-3, 0.01);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 1;
  tc.max_epochs = 50;
  tc.patience = 50;
  tc.seed = 7;
  const TrainHistory history = train(m, data, data, kCfg, tc);
  REQUIRE(history.epochs.size() >= 2);
  CHECK(history.epochs.back().train_loss < history.epochs.front().train_loss);
}

TEST_CASE("train: zero learning rate leaves parameters untouched") {
  const std::vector<Signal> data = clips(2, 2);
  UnfoldedModel m = trainable_init(3, 2, false, 1e-3, 0.01);
  const Vec before = m.pack();
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.batch_size = 2;
  tc.max_epochs = 3;
  tc.patience = 10;
  tc.seed = 8;
  train(m, data, data, kCfg, tc);
  CHECK(exact_eq(m.pack(), before));
}

TEST_CASE("train: tied and untied share the epoch-0 losses") {
  const std::vector<Signal> data = clips(3, 3);
  UnfoldedModel tied = trainable_init(4, 2, true, 1e-3, 0.01);
  UnfoldedModel untied = trainable_init(4, 2, false, 1e-3, 0.01);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.batch_size = 3;
  tc.max_epochs = 1;
  tc.patience = 5;
  tc.seed = 9;
  UnfoldedModel t1 = tied, t2 = untied;
  const TrainHistory h_tied = train(t1, data, data, kCfg, tc);
  const TrainHistory h_untied = train(t2, data, data, kCfg, tc);
  CHECK(h_tied.epochs[0].train_loss == h_untied.epochs[0].train_loss);
  CHECK(h_tied.epochs[0].val_loss == h_untied.epochs[0].val_loss);
}

TEST_CASE("train: fixed seed reproduces the history bit for bit") {
  const std::vector<Signal> data = clips(4, 4);
  TrainConfig tc;
  tc.learning_rate = 5e-4;
  tc.batch_size = 2;
  tc.max_epochs = 4;
  tc.patience = 10;
  tc.seed = 10;

  UnfoldedModel m1 = trainable_init(3, 2, false, 1e-3, 0.01);
  UnfoldedModel m2 = trainable_init(3, 2, false, 1e-3, 0.01);
  const TrainHistory h1 = train(m1, data, {data[0]}, kCfg, tc);
  const TrainHistory h2 = train(m2, data, {data[0]}, kCfg, tc);
  REQUIRE(h1.epochs.size() == h2.epochs.size());
  for (size_t e = 0; e < h1.epochs.size(); ++e) {
    CHECK(h1.epochs[e].train_loss == h2.epochs[e].train_loss);
    CHECK(h1.epochs[e].val_loss == h2.epochs[e].val_loss);
  }
  CHECK(exact_eq(m1.pack(), m2.pack()));
}

TEST_CASE("train: divergent loss aborts with a diagnostic") {
  const std::vector<Signal> data = clips(5, 2);
  UnfoldedModel m = trainable_init(3, 2, false, 1e-3, 0.01);
  TrainConfig tc;
  tc.learning_rate = 1e6;  // blow the parameters up
  tc.batch_size = 2;
  tc.max_epochs = 50;
  tc.patience = 50;
  tc.seed = 11;
  CHECK_THROWS_AS(train(m, data, data, kCfg, tc), std::runtime_error);
}

TEST_CASE("train: empty datasets rejected") {
  UnfoldedModel m = trainable_init(2, 2, false, 1e-3, 0.01);
  const std::vector<Signal> data = clips(6, 1);
  CHECK_THROWS_AS(train(m, {}, data, kCfg, TrainConfig{}), ValidationError);
  CHECK_THROWS_AS(train(m, data, {}, kCfg, TrainConfig{}), ValidationError);
}

TEST_CASE("train: beta stays outside the guard band") {
  const std::vector<Signal> data = clips(7, 2);
  UnfoldedModel m = trainable_init(2, 1, false, 1e-3, 0.05);
  // Start beta close to the guard so steps would cross 1 without projection.
  for (LayerParams& lp : m.layers) lp.beta = 1.01;
  TrainConfig tc;
  tc.learning_rate = 5e-3;
  tc.batch_size = 2;
  tc.max_epochs = 10;
  tc.patience = 20;
  tc.seed = 12;
  train(m, data, data, kCfg, tc);
  for (const LayerParams& lp : m.layers) {
    CHECK(std::abs(lp.beta - 1.0) > kBetaGuard);
  }
}
