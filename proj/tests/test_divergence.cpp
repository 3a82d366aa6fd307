#include <doctest.h>

#include <cmath>

#include "pr/divergence.hpp"
#include "testutil.hpp"

using namespace pr;
using prtest::rel_err;

namespace {

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

}  // namespace

TEST_CASE("bregman_eval: closed-form spot values") {
  const Generator quad = Generator::beta_divergence(2.0);
  CHECK(bregman_eval(quad, vec1(2.0), vec1(0.0)) == doctest::Approx(2.0));

  const Generator is = Generator::beta_divergence(0.0);
  // p/q - log(p/q) - 1 at p=1, q=2.
  CHECK(bregman_eval(is, vec1(1.0), vec1(2.0)) ==
        doctest::Approx(0.5 - std::log(0.5) - 1.0).epsilon(1e-12));

  const Generator kl = Generator::beta_divergence(1.0);
  CHECK(bregman_eval(kl, vec1(3.0), vec1(3.0)) == doctest::Approx(0.0));
}

TEST_CASE("bregman_eval: nonnegative, zero iff p == q") {
  Rng rng(11);
  for (double beta : {0.0, 1.0, 1.5, 2.0, 2.5}) {
    const Generator gen = Generator::beta_divergence(beta);
    for (int trial = 0; trial < 30; ++trial) {
      Vec p(4), q(4);
      for (int i = 0; i < 4; ++i) {
        p[i] = rng.uniform(0.05, 3.0);
        q[i] = rng.uniform(0.05, 3.0);
      }
      CHECK(bregman_eval(gen, p, q) >= -1e-12);
      CHECK(bregman_eval(gen, p, p) == doctest::Approx(0.0).epsilon(1e-12));
      // Perturbing one coordinate moves the divergence strictly above zero.
      Vec p2 = q;
      p2[0] += 0.1;
      CHECK(bregman_eval(gen, p2, q) > 1e-12);
    }
  }
}

TEST_CASE("bregman_eval: domain violations rejected") {
  const Generator kl = Generator::beta_divergence(1.0);
  CHECK_THROWS_AS(bregman_eval(kl, vec1(1.0), vec1(0.0)), std::domain_error);
  const Generator is = Generator::beta_divergence(0.0);
  CHECK_THROWS_AS(bregman_eval(is, vec1(1.0), vec1(0.0)), std::domain_error);
  CHECK_THROWS_AS(bregman_eval(is, vec1(-1.0), vec1(1.0)), std::domain_error);
}

TEST_CASE("prox_quadratic: fixed point and spot value") {
  Vec r(3);
  r << 0.5, 1.0, 2.0;
  CHECK(rel_err(prox_quadratic(r, r, 0.7), r) < 1e-15);
  CHECK(prox_quadratic(vec1(2.0), vec1(1.0), 1.0)[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(prox_quadratic(r, r, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(prox_quadratic(r, r, -1.0), std::invalid_argument);
}

TEST_CASE("prox_quadratic matches the brute-force oracle") {
  const Generator quad = Generator::beta_divergence(2.0);
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec y = vec1(rng.uniform(0.0, 4.0));
    const Vec r = vec1(rng.uniform(0.0, 4.0));
    const double rho = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const Vec closed = prox_quadratic(y, r, rho);
    const Vec brute = prox_bruteforce(quad, r, rho, y);
    CHECK(std::abs(closed[0] - brute[0]) < 1e-6);
  }
}

TEST_CASE("prox_bruteforce: rho -> infinity clamps toward y") {
  const Generator kl = Generator::beta_divergence(1.0);
  const Vec y = vec1(1.7);
  const Vec r = vec1(0.8);
  const Vec out = prox_bruteforce(kl, r, 1e6, y);
  CHECK(std::abs(out[0] - y[0]) <= 1e-4);
}

TEST_CASE("prox_bruteforce: KL stationary point at y = r = 1") {
  const Generator kl = Generator::beta_divergence(1.0);
  const Vec out = prox_bruteforce(kl, vec1(1.0), 1.0, vec1(1.0));
  CHECK(std::abs(out[0] - 1.0) < 1e-7);
}

TEST_CASE("prox_bruteforce: first-order stationarity at interior minima") {
  Rng rng(31);
  for (double beta : {0.0, 1.0, 1.5, 2.0, 2.5}) {
    const Generator gen = Generator::beta_divergence(beta);
    for (int trial = 0; trial < 20; ++trial) {
      const double rv = rng.uniform(0.2, 3.0);
      const double yv = rng.uniform(0.2, 3.0);
      const double rho = std::exp(rng.uniform(std::log(0.05), std::log(20.0)));
      const double z = prox_bruteforce(gen, vec1(rv), rho, vec1(yv))[0];
      if (z < 2 * kDomainFloor) continue;  // boundary minimum
      const double stat =
          gen.psi_prime(z) - gen.psi_prime(rv) + rho * (z - yv);
      CHECK(std::abs(stat) <= 1e-5);
    }
  }
}

TEST_CASE("prox_bruteforce is nonexpansive for convex generators") {
  Rng rng(41);
  for (double beta : {1.0, 1.5, 2.0}) {
    const Generator gen = Generator::beta_divergence(beta);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec r = vec1(rng.uniform(0.2, 2.0));
      const double rho = rng.uniform(0.3, 3.0);
      const Vec y1 = vec1(rng.uniform(0.1, 3.0));
      const Vec y2 = vec1(rng.uniform(0.1, 3.0));
      const Vec p1 = prox_bruteforce(gen, r, rho, y1);
      const Vec p2 = prox_bruteforce(gen, r, rho, y2);
      CHECK((p1 - p2).norm() <= (y1 - y2).norm() + 1e-6);
    }
  }
}

TEST_CASE("prox shift identity: spot cases") {
  // Quadratic.
  {
    const Generator gen = Generator::beta_divergence(2.0);
    const auto pair = prox_shift_check(gen, vec1(0.9), 1.3, vec1(2.4));
    CHECK(std::abs(pair.lhs[0] - pair.rhs[0]) < 2e-6);
  }
  // KL at r = y = 1, rho = 1.
  {
    const Generator gen = Generator::beta_divergence(1.0);
    const auto pair = prox_shift_check(gen, vec1(1.0), 1.0, vec1(1.0));
    CHECK(std::abs(pair.lhs[0] - pair.rhs[0]) < 2e-6);
  }
  // IS at r = 2, y = 1, rho = 10.
  {
    const Generator gen = Generator::beta_divergence(0.0);
    const auto pair = prox_shift_check(gen, vec1(2.0), 10.0, vec1(1.0));
    CHECK(std::abs(pair.lhs[0] - pair.rhs[0]) < 2e-6);
  }
}

TEST_CASE("prox shift identity holds across the beta family") {
  Rng rng(51);
  for (double beta : {0.0, 1.0, 1.5, 2.0, 2.5}) {
    const Generator gen = Generator::beta_divergence(beta);
    for (int trial = 0; trial < 25; ++trial) {
      const Vec r = vec1(rng.uniform(0.1, 3.0));
      const Vec y = vec1(rng.uniform(0.1, 3.0));
      const double rho = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
      const auto pair = prox_shift_check(gen, r, rho, y);
      CHECK(std::abs(pair.lhs[0] - pair.rhs[0]) < 2e-6);
    }
  }
}

TEST_CASE("golden_section_min locates a known minimum") {
  const double x = golden_section_min([](double z) { return (z - 1.25) * (z - 1.25); },
                                      0.0, 10.0, 1e-10);
  CHECK(std::abs(x - 1.25) < 1e-8);
}
