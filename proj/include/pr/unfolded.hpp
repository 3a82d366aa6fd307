#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pr/transforms.hpp"
#include "pr/types.hpp"

namespace pr {

// Layers with beta inside (1 - kBetaGuard, 1 + kBetaGuard) are rejected:
// the r^(beta-1)/(beta-1) term is singular at beta = 1.
inline constexpr double kBetaGuard = 1e-3;

// Adaptive piecewise-linear unit. Effective slope weights are w_c =
// -w_tilde_c^2, so the unit is always nondecreasing and strictly increasing
// once every segment carries a nonzero weight and some bias is nonnegative.
struct APLParams {
  Vec w_tilde;  // length C
  Vec b;        // length C

  int segments() const { return static_cast<int>(w_tilde.size()); }
  Vec weights() const { return -w_tilde.array().square(); }
};

// APL(y) = max(y, 0) + sum_c w_c max(-y + b_c, 0), elementwise.
Vec apl_forward(const APLParams& p, const Vec& y);

// One layer's learnable prox parameters.
struct LayerParams {
  APLParams apl;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double beta = 2.0;
};

// max(r, kDomainFloor)^(beta-1) / (beta-1), elementwise.
Vec beta_power_term(const Vec& r, double beta);
// Derivative of beta_power_term with respect to beta.
Vec beta_power_term_dbeta(const Vec& r, double beta);

// F(y, r) = APL(gamma1 y + gamma2 r^(beta-1)/(beta-1)). At the quadratic
// initialization this reproduces prox_quadratic on nonnegative inputs.
Vec sublayer_forward(const LayerParams& p, const Vec& y, const Vec& r);

struct UnfoldedModel {
  int T = 15;
  int C = 3;
  bool tied = false;
  double rho = 1e-3;
  std::vector<LayerParams> layers;  // one block when tied, else T blocks

  // w_tilde = 0, b_c = (c-1)/C, gamma1 = 1/(1+1/rho),
  // gamma2 = (1/rho)/(1+1/rho), beta = 2: every layer equals one classical
  // ADMM iteration with the quadratic prox.
  static UnfoldedModel quadratic_init(int T, int C, bool tied, double rho);

  int blocks() const { return tied ? 1 : T; }
  int params_per_block() const { return 2 * C + 3; }
  long param_count() const {
    return static_cast<long>(blocks()) * params_per_block();
  }
  const LayerParams& layer(int t) const { return layers[tied ? 0 : t]; }
  LayerParams& layer(int t) { return layers[tied ? 0 : t]; }

  // Learnable parameters, per block: [w_tilde(0..C), b(0..C), gamma1,
  // gamma2, beta]. Gradients use the same layout.
  Vec pack() const;
  void unpack(const Vec& packed);

  void validate() const;
};

using ParamGrads = Vec;

// Per-layer intermediates recorded by the forward pass; everything the
// reverse sweep needs without recomputation.
struct Tape {
  StftConfig cfg;
  long signal_length = 0;
  int sample_rate = 16000;
  Vec r_floored;  // max(r, kDomainFloor)
  Vec x0;
  CVec lambda0;

  struct Layer {
    CVec h;
    Vec mag;       // |h|
    CVec phasor;   // h/|h|, 1 where h = 0
    Vec psi_term;  // r^(beta-1)/(beta-1) for this layer's beta
    Vec pre;       // APL pre-activation
    Vec u;
    Vec x;
    CVec lambda;
  };
  std::vector<Layer> layers;

  // Angles of h_t in [0, 2*pi).
  Vec theta(int t) const;
};

struct UadmmOutput {
  Signal x;
  CVec lambda;
};

// T unfolded ADMM layers. lambda0 may be empty (zero). When tape is given it
// is filled for a subsequent backward pass.
UadmmOutput uadmm_forward(const UnfoldedModel& m, const Measurements& r,
                          const Signal& x0, const CVec& lambda0,
                          const StftConfig& cfg, Tape* tape = nullptr);

// Reverse-mode gradients of a scalar loss with upstream gradient grad_xT
// with respect to every learnable parameter, packed like
// UnfoldedModel::pack(). Tied models accumulate one shared block.
ParamGrads uadmm_backward(const UnfoldedModel& m, const Tape& tape,
                          const Vec& grad_xT);

// Applies the whole network k times, feeding (x, lambda) of one application
// into the next; lambda is carried across applications.
Signal iterate_model(const UnfoldedModel& m, const Measurements& r,
                     const Signal& x0, const StftConfig& cfg, int k);

// Checkpoint metadata recorded next to the parameters.
struct TrainMeta {
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  double final_train_loss = 0.0;
  bool stopped_early = false;
  std::string loss_name = "neg-si-sdr";
};

// Versioned JSON checkpoint; numeric fields round-trip losslessly.
void save_checkpoint(const UnfoldedModel& m, const TrainMeta& meta,
                     const std::string& path);
std::pair<UnfoldedModel, TrainMeta> load_checkpoint(const std::string& path);

}  // namespace pr
