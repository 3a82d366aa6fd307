#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pr/divergence.hpp"
#include "pr/metric.hpp"
#include "testutil.hpp"

using namespace pr;
using prtest::rel_err;
using prtest::temp_dir;

namespace {

APLParams identity_apl() {
  APLParams p;
  p.w_tilde = Vec::Ones(1);
  p.b = Vec::Zero(1);
  return p;
}

APLParams random_strict_apl(std::uint64_t seed, int C) {
  Rng rng(seed);
  APLParams p;
  p.w_tilde = Vec(C);
  p.b = Vec(C);
  for (int c = 0; c < C; ++c) {
    p.w_tilde[c] = rng.uniform(0.15, 1.0);
    p.b[c] = rng.uniform(-1.0, 2.0);
  }
  long top = 0;
  p.b.maxCoeff(&top);
  if (p.b[top] < 0.0) p.b[top] = rng.uniform(0.0, 2.0);
  return p;
}

LayerParams random_layer(std::uint64_t seed) {
  Rng rng(seed + 999);
  LayerParams lp;
  lp.apl = random_strict_apl(seed, 1 + static_cast<int>(rng.next_u64() % 3));
  lp.gamma1 = rng.uniform(0.3, 1.5);
  lp.gamma2 = rng.uniform(0.05, 1.0);
  lp.beta = rng.uniform() < 0.5 ? rng.uniform(1.2, 1.9) : rng.uniform(2.05, 2.7);
  return lp;
}

// Brute-force prox of a scalar function via golden section on an expanded
// bracket; the objective f(z) + (z - y)^2 / 2 is convex for the recovered
// metrics (gamma1 > 0).
double prox_scalar(const std::function<double(double)>& f, double y) {
  auto objective = [&](double z) { return f(z) + 0.5 * (z - y) * (z - y); };
  double lo = y - 2.0, hi = y + 2.0;
  while (objective(lo) <= objective(lo + 1e-6) && lo > -1e6) {
    lo = y - 2.0 * (y - lo);
  }
  while (objective(hi) <= objective(hi - 1e-6) && hi < 1e6) {
    hi = y + 2.0 * (hi - y);
  }
  return golden_section_min(objective, lo, hi, 1e-9);
}

}  // namespace

TEST_CASE("apl_inverse: identity unit inverts to the identity") {
  const APLParams p = identity_apl();
  Vec y(5);
  y << -2.0, -0.5, 0.0, 1.0, 3.0;
  CHECK(rel_err(apl_inverse(p, y), y) < 1e-14);
}

TEST_CASE("apl_inverse: round-trips apl_forward on strictly increasing units") {
  for (int trial = 0; trial < 20; ++trial) {
    const APLParams p = random_strict_apl(600 + trial, 3);
    Rng rng(700 + trial);
    Vec z(40);
    for (long i = 0; i < z.size(); ++i) z[i] = rng.uniform(-4.0, 4.0);
    const Vec y = apl_forward(p, z);
    const Vec back = apl_inverse(p, y);
    CHECK(rel_err(back, z) < 1e-10);
  }
}

TEST_CASE("apl_inverse: ReLU rejects negative values") {
  APLParams relu;
  relu.w_tilde = Vec::Zero(1);
  relu.b = Vec::Zero(1);
  Vec y(1);
  y << -1.0;
  CHECK_THROWS_AS(apl_inverse(relu, y), std::domain_error);
  // Positive values invert fine.
  y << 2.0;
  CHECK(apl_inverse(relu, y)[0] == doctest::Approx(2.0));
}

TEST_CASE("apl_antiderivative: identity unit gives z^2/2, dead unit gives 0") {
  const APLParams ident = identity_apl();
  for (double z : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    Vec zv(1);
    zv << z;
    CHECK(apl_antiderivative(ident, zv) == doctest::Approx(0.5 * z * z).epsilon(1e-14));
  }
  APLParams relu;
  relu.w_tilde = Vec::Zero(1);
  relu.b = Vec::Zero(1);
  Vec zv(1);
  zv << -3.0;
  CHECK(apl_antiderivative(relu, zv) == 0.0);
}

TEST_CASE("apl_antiderivative: finite-difference slope equals apl_forward") {
  for (int trial = 0; trial < 10; ++trial) {
    const APLParams p = random_strict_apl(800 + trial, 3);
    Rng rng(900 + trial);
    for (int probe = 0; probe < 30; ++probe) {
      double z = rng.uniform(-3.0, 3.0);
      // Keep away from the breakpoints.
      bool near = std::abs(z) < 1e-3;
      for (int c = 0; c < 3; ++c) near = near || std::abs(z - p.b[c]) < 1e-3;
      if (near) continue;
      Vec hi(1), lo(1), zz(1);
      const double step = 1e-7;
      hi << z + step;
      lo << z - step;
      zz << z;
      const double fd =
          (apl_antiderivative(p, hi) - apl_antiderivative(p, lo)) / (2 * step);
      CHECK(std::abs(fd - apl_forward(p, zz)[0]) < 1e-6);
    }
  }
}

TEST_CASE("sigma_eval: identity unit has sigma == 0") {
  const APLParams p = identity_apl();
  Rng rng(1000);
  for (int trial = 0; trial < 10; ++trial) {
    Vec y(3);
    for (int i = 0; i < 3; ++i) y[i] = rng.uniform(-3.0, 3.0);
    CHECK(std::abs(sigma_eval(p, y)) < 1e-12);
  }
}

TEST_CASE("sigma_eval: prox of sigma reproduces the APL unit") {
  for (int trial = 0; trial < 10; ++trial) {
    const APLParams p = random_strict_apl(1100 + trial, 2);
    Rng rng(1200 + trial);
    auto sigma1 = [&](double v) {
      Vec vv(1);
      vv << v;
      return sigma_eval(p, vv);
    };
    for (int probe = 0; probe < 5; ++probe) {
      const double z = rng.uniform(-2.0, 2.0);
      Vec zz(1);
      zz << z;
      const double expected = apl_forward(p, zz)[0];
      const double got = prox_scalar(sigma1, z);
      CHECK(std::abs(got - expected) < 1e-5);
    }
  }
}

TEST_CASE("sigma_eval: convex on a sampled grid") {
  for (int trial = 0; trial < 5; ++trial) {
    const APLParams p = random_strict_apl(1300 + trial, 3);
    const Vec grid = Vec::LinSpaced(200, -3.0, 3.0);
    Vec vals(grid.size());
    for (long i = 0; i < grid.size(); ++i) {
      Vec y(1);
      y << grid[i];
      vals[i] = sigma_eval(p, y);
    }
    for (long i = 1; i + 1 < grid.size(); ++i) {
      const double second = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
      CHECK(second >= -1e-8);
    }
  }
}

TEST_CASE("recover_metric: quadratic init reduces to the scaled squared distance") {
  // rho = 1: f_r(y) = (y - r)^2 / 2 up to an additive constant.
  const UnfoldedModel m = UnfoldedModel::quadratic_init(1, 1, false, 1.0);
  const LayerParams& lp = m.layers[0];
  auto f = [&](double y) { return recover_metric_scalar(lp, 1.0, y); };
  CHECK(std::abs((f(2.0) - f(0.0)) - 0.0) < 1e-12);
  CHECK(std::abs((f(3.0) - f(1.0)) - 2.0) < 1e-12);
}

TEST_CASE("recover_metric: degenerate identity layer gives a flat metric") {
  LayerParams lp;
  lp.apl = identity_apl();
  lp.gamma1 = 1.0;
  lp.gamma2 = 0.0;
  lp.beta = 2.0;
  const Vec y = Vec::LinSpaced(11, -2.0, 2.0);
  const Vec f = recover_metric(lp, 1.0, y);
  CHECK(f.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("recover_metric: gamma1 <= 0 rejected") {
  LayerParams lp;
  lp.apl = identity_apl();
  lp.gamma1 = 0.0;
  lp.gamma2 = 0.1;
  lp.beta = 2.0;
  Vec y(1);
  y << 1.0;
  CHECK_THROWS_AS(recover_metric(lp, 1.0, y), std::domain_error);
}

TEST_CASE("recover_metric: prox of the recovered metric reproduces the sublayer") {
  for (int trial = 0; trial < 6; ++trial) {
    const LayerParams lp = random_layer(1400 + trial);
    for (double r : {0.1, 1.0, 10.0}) {
      auto f = [&](double z) { return recover_metric_scalar(lp, r, z); };
      Vec rv(1);
      rv << r;
      const Vec grid = Vec::LinSpaced(12, 0.05, 2.5);
      for (long i = 0; i < grid.size(); ++i) {
        Vec yv(1);
        yv << grid[i];
        const double expected = sublayer_forward(lp, yv, rv)[0];
        const double got = prox_scalar(f, grid[i]);
        CHECK(std::abs(got - expected) < 1e-4);
      }
    }
  }
}

TEST_CASE("sample_metric_curve: quadratic init matches (1/rho) (y-r)^2 / 2 after min-shift") {
  for (double rho : {1.0, 1e-3}) {
    const UnfoldedModel m = UnfoldedModel::quadratic_init(3, 2, true, rho);
    const double r = 1.0;
    const Vec grid = Vec::LinSpaced(101, 0.0, 3.0);
    const auto curves = sample_metric_curve(m, r, grid);
    REQUIRE(curves.size() == 1);  // tied: single curve
    const MetricCurve& c = curves[0];
    REQUIRE(c.y.size() == grid.size());
    Vec expected(grid.size());
    for (long i = 0; i < grid.size(); ++i) {
      expected[i] = 0.5 * (grid[i] - r) * (grid[i] - r) / rho;
    }
    expected.array() -= expected.minCoeff();
    for (long i = 0; i < grid.size(); ++i) {
      CHECK(std::abs(c.f[i] - expected[i]) < 1e-8);
    }
  }
}

TEST_CASE("sample_metric_curve: untied model emits one curve per layer") {
  UnfoldedModel m = UnfoldedModel::quadratic_init(4, 2, false, 0.5);
  for (int t = 0; t < 4; ++t) {
    m.layers[t].apl = random_strict_apl(1500 + t, 2);
  }
  const Vec grid = Vec::LinSpaced(21, 0.0, 2.0);
  const auto curves = sample_metric_curve(m, 1.0, grid);
  CHECK(curves.size() == 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(curves[t].layer_index == t);
  }
}

TEST_CASE("sample_metric_curve: non-invertible grid points are absent") {
  // ReLU layers cannot be inverted below APL(0) = 0.
  const UnfoldedModel m = UnfoldedModel::quadratic_init(2, 2, true, 1.0);
  Vec grid(5);
  grid << -1.0, -0.5, 0.5, 1.0, 2.0;
  const auto curves = sample_metric_curve(m, 1.0, grid);
  REQUIRE(curves.size() == 1);
  CHECK(curves[0].y.size() == 3);
  CHECK(curves[0].y.minCoeff() == 0.5);
}

TEST_CASE("write_metric_csv: tied curves label the layer column") {
  const UnfoldedModel m = UnfoldedModel::quadratic_init(2, 1, true, 1.0);
  const Vec grid = Vec::LinSpaced(5, 0.0, 2.0);
  const auto curves = sample_metric_curve(m, 1.0, grid);
  const auto dir = temp_dir("curves");
  const std::string path = (dir / "c.csv").string();
  write_metric_csv(curves, path);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "layer,r,y,f");
  CHECK(first.substr(0, 5) == "tied,");
}
