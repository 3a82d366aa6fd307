#include "pr/solvers.hpp"

#include <chrono>
#include <cmath>

namespace pr {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Vec phase_angles(const CVec& h) {
  Vec out(h.size());
  for (long k = 0; k < h.size(); ++k) {
    if (h[k] == Cplx(0.0, 0.0)) {
      out[k] = 0.0;
    } else {
      const double a = std::arg(h[k]);
      out[k] = a < 0.0 ? a + 2.0 * M_PI : a;
    }
  }
  return out;
}

CVec unit_phasors(const CVec& h) {
  CVec out(h.size());
  for (long k = 0; k < h.size(); ++k) {
    const double m = std::abs(h[k]);
    out[k] = m > 0.0 ? h[k] / m : Cplx(1.0, 0.0);
  }
  return out;
}

std::pair<Signal, SolverTrace> griffin_lim(const Measurements& r,
                                           const Signal& x0,
                                           const StftConfig& cfg, int iters) {
  validate_signal(x0);
  if (iters < 0) {
    throw std::invalid_argument("griffin_lim: iters must be >= 0");
  }
  StftOperator op(cfg, x0.length(), x0.sample_rate);
  if (r.r.size() != op.shape().flat_size()) {
    throw ValidationError("griffin_lim: measurement size does not match framing");
  }

  const auto start = Clock::now();
  SolverTrace trace;
  Vec x = x0.samples;
  CVec s = iters > 0 ? op.forward(x) : CVec();
  for (int t = 0; t < iters; ++t) {
    const CVec projected = cmul(r.r, unit_phasors(s));
    x = op.adjoint(projected);
    s = op.forward(x);

    SolverTrace::Row row;
    row.objective = (s.cwiseAbs() - r.r).norm();
    // With u = r and theta = angle(A x) the constraint gap collapses to the
    // magnitude mismatch.
    row.primal_residual = row.objective;
    row.seconds = elapsed_seconds(start);
    trace.rows.push_back(row);
  }
  return {Signal{std::move(x), x0.sample_rate}, std::move(trace)};
}

std::pair<AdmmState, SolverTrace> admm_pr(const Measurements& r,
                                          const Signal& x0, const CVec& lambda0,
                                          double rho, const ProxFn& prox,
                                          const StftConfig& cfg, int iters) {
  validate_signal(x0);
  if (rho <= 0.0) {
    throw std::invalid_argument("admm_pr: rho must be positive");
  }
  if (iters < 0) {
    throw std::invalid_argument("admm_pr: iters must be >= 0");
  }
  StftOperator op(cfg, x0.length(), x0.sample_rate);
  const long K = op.shape().flat_size();
  if (r.r.size() != K) {
    throw ValidationError("admm_pr: measurement size does not match framing");
  }
  CVec lambda = lambda0.size() == 0 ? CVec::Zero(K).eval() : lambda0;
  if (lambda.size() != K) {
    throw ValidationError("admm_pr: lambda0 size does not match framing");
  }

  const auto start = Clock::now();
  SolverTrace trace;
  Vec x = x0.samples;
  CVec ax = op.forward(x);
  for (int t = 0; t < iters; ++t) {
    const CVec h = ax + lambda / rho;
    const Vec u = prox(h.cwiseAbs(), r.r, rho);
    const CVec phasor = unit_phasors(h);
    const CVec u_phase = cmul(u, phasor);
    x = op.adjoint(u_phase - lambda / rho);
    ax = op.forward(x);
    lambda += rho * (ax - u_phase);

    SolverTrace::Row row;
    row.objective = (ax.cwiseAbs() - r.r).norm();
    row.primal_residual = (ax - u_phase).norm();
    row.seconds = elapsed_seconds(start);
    trace.rows.push_back(row);
  }
  return {AdmmState{Signal{std::move(x), x0.sample_rate}, std::move(lambda), rho},
          std::move(trace)};
}

}  // namespace pr
