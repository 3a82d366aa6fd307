#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "pr/transforms.hpp"
#include "pr/types.hpp"

namespace pr {

struct SolverTrace {
  struct Row {
    double objective = 0.0;        // || |A x_t| - r ||
    double primal_residual = 0.0;  // || A x_t - u_t e^{i theta_t} ||
    double seconds = 0.0;          // wall time since solver start
  };
  std::vector<Row> rows;
};

struct AdmmState {
  Signal x;
  CVec lambda;
  double rho = 1e-3;
};

// Magnitude-domain proximity step: maps (|h|, r, rho) to a nonnegative
// vector. The quadratic case is prox_quadratic.
using ProxFn = std::function<Vec(const Vec& mag, const Vec& r, double rho)>;

// Complex angles in [0, 2*pi), with angle(0) defined as 0.
Vec phase_angles(const CVec& h);

// Unit phasors h/|h|, with 1 substituted where h == 0.
CVec unit_phasors(const CVec& h);

// Classical Griffin-Lim: x <- A^H (r e^{i angle(A x)}), iters times.
std::pair<Signal, SolverTrace> griffin_lim(const Measurements& r,
                                           const Signal& x0,
                                           const StftConfig& cfg, int iters);

// ADMM for magnitude-only phase retrieval (d = 1):
//   h      <- A x + lambda/rho
//   u      <- prox(|h|, r, rho)
//   theta  <- angle(h)
//   x      <- A^H (u e^{i theta} - lambda/rho)
//   lambda <- lambda + rho (A x - u e^{i theta})
// lambda0 may be empty (taken as zero).
std::pair<AdmmState, SolverTrace> admm_pr(const Measurements& r,
                                          const Signal& x0, const CVec& lambda0,
                                          double rho, const ProxFn& prox,
                                          const StftConfig& cfg, int iters);

}  // namespace pr
