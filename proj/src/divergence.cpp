#include "pr/divergence.hpp"

#include <cmath>
#include <string>

namespace pr {

Generator Generator::beta_divergence(double beta) {
  Generator gen;
  gen.beta = beta;
  if (beta == 0.0) {
    // Itakura-Saito: D(p|q) = p/q - log(p/q) - 1.
    gen.psi = [](double z) { return -std::log(z); };
    gen.psi_prime = [](double z) { return -1.0 / z; };
  } else if (beta == 1.0) {
    // Kullback-Leibler: D(p|q) = p log(p/q) - p + q.
    gen.psi = [](double z) { return z > 0.0 ? z * std::log(z) - z : 0.0; };
    gen.psi_prime = [](double z) { return std::log(z); };
  } else {
    gen.psi = [beta](double z) { return std::pow(z, beta) / (beta * (beta - 1.0)); };
    gen.psi_prime = [beta](double z) { return std::pow(z, beta - 1.0) / (beta - 1.0); };
  }
  return gen;
}

double bregman_eval(const Generator& gen, const Vec& p, const Vec& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("bregman_eval: p and q differ in length");
  }
  double acc = 0.0;
  for (long k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) {
      throw std::domain_error("bregman_eval: negative entry at index " +
                              std::to_string(k));
    }
    if (q[k] == 0.0 && gen.beta <= 1.0) {
      throw std::domain_error("bregman_eval: q=0 outside the domain of psi' "
                              "for beta <= 1 (index " + std::to_string(k) + ")");
    }
    acc += gen.psi(p[k]) - gen.psi(q[k]) - gen.psi_prime(q[k]) * (p[k] - q[k]);
  }
  return acc;
}

Vec prox_quadratic(const Vec& y, const Vec& r, double rho) {
  if (y.size() != r.size()) {
    throw std::invalid_argument("prox_quadratic: shape mismatch");
  }
  if (rho <= 0.0) {
    throw std::invalid_argument("prox_quadratic: rho must be positive");
  }
  // (y + r/rho) / (1 + 1/rho), evaluated in the same affine form the
  // unfolded sublayer uses at its quadratic initialization so the two
  // solver paths agree bit for bit.
  const double inv_rho = 1.0 / rho;
  const double g1 = 1.0 / (1.0 + inv_rho);
  const double g2 = inv_rho / (1.0 + inv_rho);
  return g1 * y + g2 * r;
}

double golden_section_min(const std::function<double(double)>& f, double lo,
                          double hi, double xtol) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

namespace {

double scalar_prox_min(const std::function<double(double)>& objective,
                       double z_max) {
  constexpr double xtol = 1e-9;
  const double z = golden_section_min(objective, kDomainFloor, z_max, xtol);
  if (z > z_max - 1e3 * xtol) {
    // Minimum pressed against the ceiling: check for outward descent.
    const double step = 1e-6 * std::max(1.0, z_max);
    if (objective(z_max) <= objective(z_max - step)) {
      throw std::runtime_error(
          "prox_bruteforce: minimum not bracketable in [" +
          std::to_string(kDomainFloor) + ", " + std::to_string(z_max) + "]");
    }
  }
  return z;
}

}  // namespace

Vec prox_bruteforce(const Generator& gen, const Vec& r, double rho,
                    const Vec& y) {
  if (y.size() != r.size()) {
    throw std::invalid_argument("prox_bruteforce: shape mismatch");
  }
  if (rho <= 0.0) {
    throw std::invalid_argument("prox_bruteforce: rho must be positive");
  }
  Vec out(y.size());
  for (long k = 0; k < y.size(); ++k) {
    const double rf = std::max(r[k], kDomainFloor);
    const double yk = y[k];
    const double psi_r = gen.psi(rf);
    const double dpsi_r = gen.psi_prime(rf);
    auto objective = [&](double z) {
      return gen.psi(z) - psi_r - dpsi_r * (z - rf) +
             0.5 * rho * (z - yk) * (z - yk);
    };
    const double z_max = 10.0 * std::max({yk, r[k], 1.0});
    out[k] = scalar_prox_min(objective, z_max);
  }
  return out;
}

ProxShiftPair prox_shift_check(const Generator& gen, const Vec& r, double rho,
                               const Vec& y) {
  ProxShiftPair pair;
  pair.lhs = prox_bruteforce(gen, r, rho, y);
  pair.rhs.resize(y.size());
  for (long k = 0; k < y.size(); ++k) {
    const double rf = std::max(r[k], kDomainFloor);
    const double shifted = y[k] + gen.psi_prime(rf) / rho;
    auto objective = [&](double z) {
      return gen.psi(z) + 0.5 * rho * (z - shifted) * (z - shifted);
    };
    const double z_max = 10.0 * std::max({shifted, r[k], 1.0});
    pair.rhs[k] = scalar_prox_min(objective, z_max);
  }
  return pair;
}

}  // namespace pr
