#include "pr/metric.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "pr/util.hpp"

namespace pr {

namespace {

struct InverseTables {
  Vec w;      // effective weights, w_c = -w_tilde_c^2
  Vec apl_b;  // APL(b_c)
  double apl_0 = 0.0;
};

InverseTables inverse_tables(const APLParams& p) {
  InverseTables t;
  t.w = p.weights();
  Vec probe(p.segments() + 1);
  probe.head(p.segments()) = p.b;
  probe[p.segments()] = 0.0;
  const Vec vals = apl_forward(p, probe);
  t.apl_b = vals.head(p.segments());
  t.apl_0 = vals[p.segments()];
  return t;
}

double inverse_at(const APLParams& p, const InverseTables& t, double y) {
  // y - sum_c w_c b_c [y <= APL(b_c)]
  // ------------------------------------------------
  // [y >= APL(0)] - sum_c w_c [y <= APL(b_c)]
  double num = y;
  double den = y >= t.apl_0 ? 1.0 : 0.0;
  for (int c = 0; c < p.segments(); ++c) {
    if (y <= t.apl_b[c]) {
      num -= t.w[c] * p.b[c];
      den -= t.w[c];
    }
  }
  if (den < 1e-12) {
    throw std::domain_error(
        "apl_inverse: y = " + std::to_string(y) +
        " falls on a flat segment or outside the strictly increasing range");
  }
  return num / den;
}

}  // namespace

double apl_inverse_scalar(const APLParams& p, double y) {
  const InverseTables t = inverse_tables(p);
  return inverse_at(p, t, y);
}

Vec apl_inverse(const APLParams& p, const Vec& y) {
  const InverseTables t = inverse_tables(p);
  Vec out(y.size());
  for (long k = 0; k < y.size(); ++k) {
    out[k] = inverse_at(p, t, y[k]);
  }
  return out;
}

double apl_antiderivative(const APLParams& p, const Vec& z) {
  const Vec w = p.weights();
  double acc = 0.0;
  for (long k = 0; k < z.size(); ++k) {
    const double zk = z[k];
    double v = zk >= 0.0 ? 0.5 * zk * zk : 0.0;
    for (int c = 0; c < p.segments(); ++c) {
      const double bc = p.b[c];
      if (zk <= bc && w[c] != 0.0) {
        v += w[c] * (-0.5 * zk * zk + bc * zk - 0.5 * bc * bc);
      }
    }
    acc += v;
  }
  return acc;
}

double sigma_eval(const APLParams& p, const Vec& y) {
  const Vec z = apl_inverse(p, y);
  return z.dot(y) - 0.5 * y.squaredNorm() - apl_antiderivative(p, z);
}

double recover_metric_scalar(const LayerParams& p, double r, double y) {
  if (p.gamma1 <= 0.0) {
    throw std::domain_error("recover_metric: gamma1 must be positive");
  }
  const double z = apl_inverse_scalar(p.apl, y);
  Vec rv(1), zv(1);
  rv[0] = r;
  zv[0] = z;
  const double psi_r = beta_power_term(rv, p.beta)[0];
  return (z - p.gamma2 * psi_r) * y / p.gamma1 - 0.5 * y * y -
         apl_antiderivative(p.apl, zv) / p.gamma1;
}

Vec recover_metric(const LayerParams& p, double r, const Vec& y) {
  if (p.gamma1 <= 0.0) {
    throw std::domain_error("recover_metric: gamma1 must be positive");
  }
  const InverseTables t = inverse_tables(p.apl);
  Vec rv(1);
  rv[0] = r;
  const double psi_r = beta_power_term(rv, p.beta)[0];
  Vec out(y.size());
  Vec zv(1);
  for (long k = 0; k < y.size(); ++k) {
    const double z = inverse_at(p.apl, t, y[k]);
    zv[0] = z;
    out[k] = (z - p.gamma2 * psi_r) * y[k] / p.gamma1 - 0.5 * y[k] * y[k] -
             apl_antiderivative(p.apl, zv) / p.gamma1;
  }
  return out;
}

std::vector<MetricCurve> sample_metric_curve(const UnfoldedModel& m, double r,
                                             const Vec& y_grid) {
  m.validate();
  for (long k = 1; k < y_grid.size(); ++k) {
    if (!(y_grid[k] > y_grid[k - 1])) {
      throw std::invalid_argument("sample_metric_curve: grid must be strictly increasing");
    }
  }
  std::vector<MetricCurve> curves;
  for (int block = 0; block < m.blocks(); ++block) {
    const LayerParams& lp = m.layers[block];
    if (lp.gamma1 <= 0.0) {
      throw std::domain_error("sample_metric_curve: layer " +
                              std::to_string(block) + " has gamma1 <= 0");
    }
    if (lp.apl.b.maxCoeff() < 0.0) {
      std::cerr << "warning: layer " << block
                << " has no nonnegative APL bias; the unit is not strictly "
                   "increasing on the negatives and recovery may be partial\n";
    }
    std::vector<double> ys, fs;
    ys.reserve(y_grid.size());
    fs.reserve(y_grid.size());
    for (long k = 0; k < y_grid.size(); ++k) {
      try {
        const double f = recover_metric_scalar(lp, r, y_grid[k]);
        ys.push_back(y_grid[k]);
        fs.push_back(f);
      } catch (const std::domain_error&) {
        // Non-invertible point: reported as absent.
      }
    }
    MetricCurve curve;
    curve.r_value = r;
    curve.layer_index = m.tied ? -1 : block;
    curve.y = Eigen::Map<const Vec>(ys.data(), static_cast<long>(ys.size()));
    curve.f = Eigen::Map<const Vec>(fs.data(), static_cast<long>(fs.size()));
    if (curve.f.size() > 0) {
      curve.f.array() -= curve.f.minCoeff();
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

void write_metric_csv(const std::vector<MetricCurve>& curves,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open curve CSV for writing: " + path);
  }
  out << "layer,r,y,f\n";
  for (const MetricCurve& c : curves) {
    const std::string layer =
        c.tied() ? std::string("tied") : std::to_string(c.layer_index);
    for (long k = 0; k < c.y.size(); ++k) {
      out << layer << "," << fmt_double(c.r_value) << "," << fmt_double(c.y[k])
          << "," << fmt_double(c.f[k]) << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error("failed writing curve CSV: " + path);
  }
}

}  // namespace pr
