#include <doctest.h>

#include <cmath>

#include "pr/divergence.hpp"
#include "pr/solvers.hpp"
#include "pr/synth.hpp"
#include "testutil.hpp"

using namespace pr;
using prtest::random_signal;
using prtest::rel_err;

namespace {

const StftConfig kCfg = StftConfig::for_window(64);

Measurements measure_of(const Signal& x) {
  StftOperator op(kCfg, x.length(), x.sample_rate);
  return Measurements{op.magnitudes(x.samples)};
}

Signal random_phase_init(const Measurements& r, long length, int rate,
                         std::uint64_t seed) {
  StftOperator op(kCfg, length, rate);
  Rng rng(seed);
  const Vec phi = rng.phases(r.r.size());
  CVec init(phi.size());
  for (long k = 0; k < phi.size(); ++k) {
    init[k] = Cplx(std::cos(phi[k]), std::sin(phi[k]));
  }
  return Signal{op.adjoint(cmul(r.r, init)), rate};
}

}  // namespace

TEST_CASE("phase_angles: range [0, 2pi) with angle(0) = 0") {
  CVec h(4);
  h << Cplx(1, 1), Cplx(-1, -1), Cplx(0, 0), Cplx(0, -2);
  const Vec theta = phase_angles(h);
  CHECK(theta[0] == doctest::Approx(M_PI / 4));
  CHECK(theta[1] == doctest::Approx(1.25 * M_PI));
  CHECK(theta[2] == 0.0);
  CHECK(theta[3] == doctest::Approx(1.5 * M_PI));
  for (long i = 0; i < 4; ++i) {
    CHECK(theta[i] >= 0.0);
    CHECK(theta[i] < 2 * M_PI);
  }
}

TEST_CASE("griffin_lim: consistent initialization is a fixed point") {
  const Signal x = random_signal(61, 400, 8000);
  const Measurements r = measure_of(x);
  const auto [out, trace] = griffin_lim(r, x, kCfg, 10);
  CHECK(rel_err(out.samples, x.samples) < 1e-12);
  CHECK(trace.rows.size() == 10);
}

TEST_CASE("griffin_lim: zero iterations returns x0 unchanged") {
  const Signal x = random_signal(62, 300, 8000);
  const Measurements r = measure_of(x);
  const auto [out, trace] = griffin_lim(r, x, kCfg, 0);
  CHECK(prtest::exact_eq(out.samples, x.samples));
  CHECK(trace.rows.empty());
}

TEST_CASE("griffin_lim: objective is non-increasing from a random phase start") {
  const Signal x{make_speech_like(7, 0.25, 8000)};
  const Measurements r = measure_of(x);
  const Signal x0 = random_phase_init(r, x.length(), 8000, 99);
  const auto [out, trace] = griffin_lim(r, x0, kCfg, 100);
  for (size_t t = 1; t < trace.rows.size(); ++t) {
    CHECK(trace.rows[t].objective <=
          trace.rows[t - 1].objective * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("admm_pr: feasible fixed point stays put") {
  const Signal x = random_signal(63, 500, 8000);
  const Measurements r = measure_of(x);
  StftOperator op(kCfg, x.length(), x.sample_rate);
  const auto [state, trace] =
      admm_pr(r, x, CVec(), 1e-3, prox_quadratic, kCfg, 50);
  CHECK(rel_err(state.x.samples, x.samples) < 1e-10);
  CHECK(state.lambda.cwiseAbs().maxCoeff() < 1e-10 * r.r.norm());
}

TEST_CASE("admm_pr: pass-through prox reproduces h") {
  // With u = |h| the split variable u e^{i theta} must equal h exactly.
  const Signal x = random_signal(64, 300, 8000);
  const Measurements r = measure_of(x);
  const Signal x0 = random_phase_init(r, x.length(), 8000, 17);
  ProxFn pass_through = [](const Vec& mag, const Vec&, double) { return mag; };
  StftOperator op(kCfg, x.length(), x.sample_rate);

  // One manual step against the solver's internals.
  const CVec h = op.forward(x0.samples);  // lambda0 = 0
  const Vec u = h.cwiseAbs();
  const CVec up = cmul(u, unit_phasors(h));
  CHECK(rel_err(up, h) < 1e-14);

  const auto [state, trace] = admm_pr(r, x0, CVec(), 0.5, pass_through, kCfg, 3);
  CHECK(trace.rows.size() == 3);
}

TEST_CASE("admm_pr: zero measurements drive the iterates toward zero") {
  const Signal x = random_signal(65, 400, 8000);
  Measurements r = measure_of(x);
  r.r.setZero();
  StftOperator op(kCfg, x.length(), x.sample_rate);
  const double initial = op.forward(x.samples).norm();
  Vec norms(20);
  Signal cur = x;
  CVec lambda;
  for (int t = 0; t < 20; ++t) {
    auto [state, trace] = admm_pr(r, cur, lambda, 1e-1, prox_quadratic, kCfg, 1);
    cur = state.x;
    lambda = state.lambda;
    norms[t] = op.forward(cur.samples).norm();
  }
  CHECK(norms[19] < norms[0]);
  CHECK(norms[19] < initial);
}

TEST_CASE("admm_pr: invalid arguments rejected") {
  const Signal x = random_signal(66, 200, 8000);
  const Measurements r = measure_of(x);
  CHECK_THROWS_AS(admm_pr(r, x, CVec(), 0.0, prox_quadratic, kCfg, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(admm_pr(r, x, CVec::Ones(3), 1.0, prox_quadratic, kCfg, 5),
                  ValidationError);
  Measurements bad{Vec::Ones(7)};
  CHECK_THROWS_AS(admm_pr(bad, x, CVec(), 1.0, prox_quadratic, kCfg, 5),
                  ValidationError);
}

TEST_CASE("admm beats gla on spectral distance after long runs") {
  // Desk-size replication of the baseline ranking: 1500 iterations each on
  // a short speech-like clip, rho = 1e-3.
  const Signal x{make_speech_like(12, 0.25, 8000)};
  const Measurements r = measure_of(x);
  const Signal x0 = random_phase_init(r, x.length(), 8000, 5);
  const auto [xg, tg] = griffin_lim(r, x0, kCfg, 1500);
  const auto [sa, ta] = admm_pr(r, x0, CVec(), 1e-3, prox_quadratic, kCfg, 1500);
  const double gla_obj = tg.rows.back().objective / r.r.norm();
  const double admm_obj = ta.rows.back().objective / r.r.norm();
  CHECK(admm_obj < gla_obj);
}
