#pragma once

#include <string>
#include <vector>

#include "pr/types.hpp"
#include "pr/unfolded.hpp"

namespace pr {

// One learned-metric curve f_r sampled on a y grid. layer_index is -1 for
// tied models (a single shared curve). Grid points where the APL unit is
// not invertible are absent from y/f rather than fabricated.
struct MetricCurve {
  double r_value = 0.0;
  Vec y;
  Vec f;
  int layer_index = -1;

  bool tied() const { return layer_index < 0; }
};

// Closed-form piecewise inverse of a strictly increasing APL unit,
// evaluated per breakpoint interval with right-continuous selection.
// Throws std::domain_error where y falls on a flat segment or outside the
// strictly increasing range (e.g. ReLU on negatives).
Vec apl_inverse(const APLParams& p, const Vec& y);
double apl_inverse_scalar(const APLParams& p, double y);

// Convex antiderivative of the APL unit, summed over coordinates:
//   z^2/2 [z >= 0] + sum_c w_c (-z^2/2 + b_c z - b_c^2/2) [z <= b_c].
// The -b_c^2/2 term completes each piece so the function is continuous.
double apl_antiderivative(const APLParams& p, const Vec& z);

// sigma(y) = <APL^-1(y), y> - ||y||^2/2 - antiderivative(APL^-1(y)):
// the convex function whose prox is the APL unit.
double sigma_eval(const APLParams& p, const Vec& y);

// f_r evaluated pointwise on a grid of scalar y values:
//   f_r(y) = (1/g1) (APL^-1(y) - g2 r^(beta-1)/(beta-1)) y - y^2/2
//            - (1/g1) antiderivative(APL^-1(y)).
// The sublayer F(., r) is the prox of f_r. Requires gamma1 > 0 and an
// invertible APL on the grid.
Vec recover_metric(const LayerParams& p, double r, const Vec& y);
double recover_metric_scalar(const LayerParams& p, double r, double y);

// One curve per layer (untied) or a single curve (tied), min-shifted so the
// smallest sampled value is 0 (the metric is identified only up to an
// additive constant). Emits a warning to stderr when a layer has no
// nonnegative bias, which breaks strict monotonicity on the negatives.
std::vector<MetricCurve> sample_metric_curve(const UnfoldedModel& m, double r,
                                             const Vec& y_grid);

// CSV with columns layer,r,y,f; layer is "tied" or the layer index.
void write_metric_csv(const std::vector<MetricCurve>& curves,
                      const std::string& path);

}  // namespace pr
