#pragma once

#include <functional>

#include "pr/types.hpp"

namespace pr {

// Generating function of a Bregman divergence. beta selects the
// beta-divergence family: psi'(z) = z^(beta-1)/(beta-1) for beta not in
// {0, 1}, with the Itakura-Saito (beta = 0) and Kullback-Leibler (beta = 1)
// limit forms handled explicitly.
struct Generator {
  double beta = 2.0;
  std::function<double(double)> psi;
  std::function<double(double)> psi_prime;

  static Generator beta_divergence(double beta);
};

// D_psi(p | q) = sum_k psi(p_k) - psi(q_k) - psi'(q_k) (p_k - q_k).
// Requires q_k > 0 when beta <= 1 (psi' singular at 0).
double bregman_eval(const Generator& gen, const Vec& p, const Vec& q);

// prox_{rho^-1 (1/2)||. - r||^2}(y) = (y + r/rho) / (1 + 1/rho), elementwise.
Vec prox_quadratic(const Vec& y, const Vec& r, double rho);

// Coordinatewise argmin over z in [kDomainFloor, z_max] of
//   D_psi(z | r_k) + (rho/2) (z - y_k)^2
// located by golden-section search to ~1e-9 in z. An oracle for testing and
// metric recovery, not a hot-path routine. Throws if the minimum sits on the
// search ceiling (non-bracketable).
Vec prox_bruteforce(const Generator& gen, const Vec& r, double rho,
                    const Vec& y);

// Both routes of the prox shift identity: lhs solves the divergence prox
// directly, rhs solves the prox of psi alone at y + psi'(r)/rho. Emitted as
// a pair so tests can compare two independent minimizations.
struct ProxShiftPair {
  Vec lhs;
  Vec rhs;
};

ProxShiftPair prox_shift_check(const Generator& gen, const Vec& r, double rho,
                               const Vec& y);

// Golden-section minimizer of a unimodal scalar function on [lo, hi];
// terminates when the bracket is narrower than xtol.
double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double xtol);

}  // namespace pr
