#include "pr/unfolded.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pr/solvers.hpp"

namespace pr {

Vec apl_forward(const APLParams& p, const Vec& y) {
  if (p.w_tilde.size() != p.b.size() || p.w_tilde.size() < 1) {
    throw std::invalid_argument("apl_forward: w_tilde and b must have equal length >= 1");
  }
  Vec out = y.cwiseMax(0.0);
  for (int c = 0; c < p.segments(); ++c) {
    const double w = -p.w_tilde[c] * p.w_tilde[c];
    if (w != 0.0) {
      out.array() += w * (p.b[c] - y.array()).max(0.0);
    }
  }
  return out;
}

Vec beta_power_term(const Vec& r, double beta) {
  if (beta == 2.0) {
    return r;
  }
  // The floor is only needed where the power is singular (negative
  // exponent); leaving r untouched for beta > 1 keeps the quadratic
  // initialization an exact match of prox_quadratic.
  const double denom = beta - 1.0;
  const double lo = beta < 1.0 ? kDomainFloor : 0.0;
  Vec out(r.size());
  for (long k = 0; k < r.size(); ++k) {
    out[k] = std::pow(std::max(r[k], lo), denom) / denom;
  }
  return out;
}

Vec beta_power_term_dbeta(const Vec& r, double beta) {
  // d/dbeta [ r^(beta-1)/(beta-1) ] = r^(beta-1) (ln(r)(beta-1) - 1) / (beta-1)^2
  const double denom = beta - 1.0;
  Vec out(r.size());
  for (long k = 0; k < r.size(); ++k) {
    const double rf = std::max(r[k], kDomainFloor);
    const double lr = std::log(rf);
    out[k] = std::pow(rf, denom) * (lr * denom - 1.0) / (denom * denom);
  }
  return out;
}

namespace {

void check_beta(double beta) {
  if (std::abs(beta - 1.0) < kBetaGuard) {
    throw std::domain_error("layer beta " + std::to_string(beta) +
                            " is inside the guard band around 1");
  }
}

}  // namespace

Vec sublayer_forward(const LayerParams& p, const Vec& y, const Vec& r) {
  check_beta(p.beta);
  if (y.size() != r.size()) {
    throw std::invalid_argument("sublayer_forward: shape mismatch");
  }
  const Vec psi = beta_power_term(r, p.beta);
  return apl_forward(p.apl, p.gamma1 * y + p.gamma2 * psi);
}

UnfoldedModel UnfoldedModel::quadratic_init(int T, int C, bool tied,
                                            double rho) {
  if (T < 0 || C < 1 || rho <= 0.0) {
    throw std::invalid_argument("quadratic_init: need T >= 0, C >= 1, rho > 0");
  }
  UnfoldedModel m;
  m.T = T;
  m.C = C;
  m.tied = tied;
  m.rho = rho;
  // gamma expressions match prox_quadratic exactly (same rounding).
  const double inv_rho = 1.0 / rho;
  LayerParams lp;
  lp.apl.w_tilde = Vec::Zero(C);
  lp.apl.b = Vec::LinSpaced(C, 0.0, (C - 1.0) / C);
  lp.gamma1 = 1.0 / (1.0 + inv_rho);
  lp.gamma2 = inv_rho / (1.0 + inv_rho);
  lp.beta = 2.0;
  m.layers.assign(m.blocks(), lp);
  return m;
}

Vec UnfoldedModel::pack() const {
  Vec out(param_count());
  long i = 0;
  for (const LayerParams& lp : layers) {
    out.segment(i, C) = lp.apl.w_tilde;
    out.segment(i + C, C) = lp.apl.b;
    out[i + 2 * C] = lp.gamma1;
    out[i + 2 * C + 1] = lp.gamma2;
    out[i + 2 * C + 2] = lp.beta;
    i += params_per_block();
  }
  return out;
}

void UnfoldedModel::unpack(const Vec& packed) {
  if (packed.size() != param_count()) {
    throw std::invalid_argument("unpack: wrong parameter count");
  }
  long i = 0;
  for (LayerParams& lp : layers) {
    lp.apl.w_tilde = packed.segment(i, C);
    lp.apl.b = packed.segment(i + C, C);
    lp.gamma1 = packed[i + 2 * C];
    lp.gamma2 = packed[i + 2 * C + 1];
    lp.beta = packed[i + 2 * C + 2];
    i += params_per_block();
  }
}

void UnfoldedModel::validate() const {
  if (T < 0 || C < 1 || rho <= 0.0) {
    throw ValidationError("model: need T >= 0, C >= 1, rho > 0");
  }
  if (static_cast<int>(layers.size()) != blocks()) {
    throw ValidationError("model: expected " + std::to_string(blocks()) +
                          " parameter blocks, have " +
                          std::to_string(layers.size()));
  }
  for (const LayerParams& lp : layers) {
    if (lp.apl.segments() != C || lp.apl.b.size() != C) {
      throw ValidationError("model: APL parameter length != C");
    }
    check_beta(lp.beta);
  }
}

Vec Tape::theta(int t) const {
  return phase_angles(layers.at(t).h);
}

UadmmOutput uadmm_forward(const UnfoldedModel& m, const Measurements& r,
                          const Signal& x0, const CVec& lambda0,
                          const StftConfig& cfg, Tape* tape) {
  m.validate();
  validate_signal(x0);
  StftOperator op(cfg, x0.length(), x0.sample_rate);
  const long K = op.shape().flat_size();
  if (r.r.size() != K) {
    throw ValidationError("uadmm_forward: measurement size does not match framing");
  }
  CVec lambda = lambda0.size() == 0 ? CVec::Zero(K).eval() : lambda0;
  if (lambda.size() != K) {
    throw ValidationError("uadmm_forward: lambda0 size does not match framing");
  }

  const double rho = m.rho;
  if (tape) {
    tape->cfg = cfg;
    tape->signal_length = x0.length();
    tape->sample_rate = x0.sample_rate;
    tape->r_floored = r.r.cwiseMax(kDomainFloor);
    tape->x0 = x0.samples;
    tape->lambda0 = lambda;
    tape->layers.clear();
    tape->layers.reserve(m.T);
  }

  Vec x = x0.samples;
  if (m.T == 0) {
    return {Signal{std::move(x), x0.sample_rate}, std::move(lambda)};
  }

  CVec s = op.forward(x);
  for (int t = 0; t < m.T; ++t) {
    const LayerParams& lp = m.layer(t);
    const CVec h = s + lambda / rho;
    const Vec mag = h.cwiseAbs();
    const CVec phasor = unit_phasors(h);
    const Vec psi = beta_power_term(r.r, lp.beta);
    const Vec pre = lp.gamma1 * mag + lp.gamma2 * psi;
    const Vec u = apl_forward(lp.apl, pre);
    const CVec u_phase = cmul(u, phasor);
    x = op.adjoint(u_phase - lambda / rho);
    s = op.forward(x);
    lambda += rho * (s - u_phase);

    if (tape) {
      tape->layers.push_back(Tape::Layer{h, mag, phasor, psi, pre, u, x, lambda});
    }
  }
  return {Signal{std::move(x), x0.sample_rate}, std::move(lambda)};
}

ParamGrads uadmm_backward(const UnfoldedModel& m, const Tape& tape,
                          const Vec& grad_xT) {
  m.validate();
  if (static_cast<int>(tape.layers.size()) != m.T) {
    throw std::invalid_argument("uadmm_backward: tape does not match model depth");
  }
  StftOperator op(tape.cfg, tape.signal_length, tape.sample_rate);
  const long K = op.shape().flat_size();
  if (grad_xT.size() != tape.signal_length) {
    throw std::invalid_argument("uadmm_backward: grad_xT length mismatch");
  }

  const double rho = m.rho;
  const int C = m.C;
  const int stride = m.params_per_block();
  Vec grads = Vec::Zero(m.param_count());

  Vec gx = grad_xT;
  CVec glam = CVec::Zero(K);

  for (int t = m.T - 1; t >= 0; --t) {
    const LayerParams& lp = m.layer(t);
    const Tape::Layer& tl = tape.layers[t];
    const long base = static_cast<long>(m.tied ? 0 : t) * stride;

    // lambda_t = lambda_{t-1} + rho (A x_t - u p);  x_t = A^H v;  v = u p - lambda_{t-1}/rho
    const Vec gx_tot = gx + rho * op.adjoint(glam);
    const CVec gv = op.forward(gx_tot);
    const CVec gup = gv - rho * glam;  // gradient on the product u*phasor
    const Vec gu = (tl.phasor.conjugate().array() * gup.array()).real().matrix();
    const CVec gp = cmul(tl.u, gup);
    CVec glam_prev = glam - gv / rho;

    // u = APL(pre): right-hand slopes at the kinks.
    Vec gpre(tl.pre.size());
    {
      const Vec& pre = tl.pre;
      Vec slope = (pre.array() >= 0.0).cast<double>().matrix();
      for (int c = 0; c < C; ++c) {
        const double wt = lp.apl.w_tilde[c];
        const double w = -wt * wt;
        const double bc = lp.apl.b[c];
        double gw_acc = 0.0;
        double gb_acc = 0.0;
        for (long k = 0; k < pre.size(); ++k) {
          if (pre[k] < bc) {
            slope[k] += wt * wt;
            gw_acc += gu[k] * (bc - pre[k]);
            gb_acc += gu[k];
          }
        }
        grads[base + c] += -2.0 * wt * gw_acc;
        grads[base + C + c] += w * gb_acc;
      }
      gpre = gu.array() * slope.array();
    }

    // pre = gamma1 mag + gamma2 psi_term(beta)
    grads[base + 2 * C] += gpre.dot(tl.mag);
    grads[base + 2 * C + 1] += gpre.dot(tl.psi_term);
    grads[base + 2 * C + 2] +=
        lp.gamma2 * gpre.dot(beta_power_term_dbeta(tape.r_floored, lp.beta));
    const Vec gmag = lp.gamma1 * gpre;

    // mag = |h|, phasor = h/|h|; denominators floored at kDomainFloor.
    const Vec m_floor = tl.mag.cwiseMax(kDomainFloor);
    const Vec cross = ((gp.conjugate().array() * tl.h.array()).imag() /
                       m_floor.array().cube())
                          .matrix();
    const CVec gh = cmul(gmag.cwiseQuotient(m_floor), tl.h) -
                    Cplx(0.0, 1.0) * cmul(cross, tl.h);

    // h = A x_{t-1} + lambda_{t-1}/rho
    glam_prev += gh / rho;
    gx = op.adjoint(gh);
    glam = std::move(glam_prev);
  }
  return grads;
}

Signal iterate_model(const UnfoldedModel& m, const Measurements& r,
                     const Signal& x0, const StftConfig& cfg, int k) {
  if (k < 1) {
    throw std::invalid_argument("iterate_model: k must be >= 1");
  }
  Signal x = x0;
  CVec lambda;
  for (int i = 0; i < k; ++i) {
    UadmmOutput out = uadmm_forward(m, r, x, lambda, cfg);
    x = std::move(out.x);
    lambda = std::move(out.lambda);
  }
  return x;
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const nlohmann::json& arr) {
  Vec v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<long>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const UnfoldedModel& m, const TrainMeta& meta,
                     const std::string& path) {
  m.validate();
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = "uadmm-checkpoint";
  j["T"] = m.T;
  j["C"] = m.C;
  j["tied"] = m.tied;
  j["rho"] = m.rho;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerParams& lp : m.layers) {
    nlohmann::json l;
    l["w_tilde"] = vec_to_json(lp.apl.w_tilde);
    l["b"] = vec_to_json(lp.apl.b);
    l["gamma1"] = lp.gamma1;
    l["gamma2"] = lp.gamma2;
    l["beta"] = lp.beta;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["training"] = {{"seed", meta.seed},
                   {"learning_rate", meta.learning_rate},
                   {"epochs_run", meta.epochs_run},
                   {"best_epoch", meta.best_epoch},
                   {"best_val_loss", meta.best_val_loss},
                   {"final_train_loss", meta.final_train_loss},
                   {"stopped_early", meta.stopped_early},
                   {"loss", meta.loss_name}};
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open checkpoint for writing: " + path);
  }
  out << j.dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("failed writing checkpoint: " + path);
  }
}

std::pair<UnfoldedModel, TrainMeta> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open checkpoint: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("kind").get<std::string>() != "uadmm-checkpoint") {
      throw ValidationError("checkpoint " + path + " has unexpected kind");
    }
    if (j.at("format_version").get<int>() != 1) {
      throw ValidationError("checkpoint " + path + " has unsupported format_version");
    }
    UnfoldedModel m;
    m.T = j.at("T").get<int>();
    m.C = j.at("C").get<int>();
    m.tied = j.at("tied").get<bool>();
    m.rho = j.at("rho").get<double>();
    for (const auto& l : j.at("layers")) {
      LayerParams lp;
      lp.apl.w_tilde = vec_from_json(l.at("w_tilde"));
      lp.apl.b = vec_from_json(l.at("b"));
      lp.gamma1 = l.at("gamma1").get<double>();
      lp.gamma2 = l.at("gamma2").get<double>();
      lp.beta = l.at("beta").get<double>();
      m.layers.push_back(std::move(lp));
    }
    TrainMeta meta;
    if (j.contains("training")) {
      const auto& tr = j["training"];
      meta.seed = tr.value("seed", std::uint64_t{0});
      meta.learning_rate = tr.value("learning_rate", 0.0);
      meta.epochs_run = tr.value("epochs_run", 0);
      meta.best_epoch = tr.value("best_epoch", 0);
      meta.best_val_loss = tr.value("best_val_loss", 0.0);
      meta.final_train_loss = tr.value("final_train_loss", 0.0);
      meta.stopped_early = tr.value("stopped_early", false);
      meta.loss_name = tr.value("loss", std::string("neg-si-sdr"));
    }
    m.validate();
    return {std::move(m), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path + " is malformed: " + e.what());
  }
}

}  // namespace pr
