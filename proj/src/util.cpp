#include "pr/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace pr {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Quartiles quartiles(const std::vector<double>& values) {
  return Quartiles{quantile(values, 0.5), quantile(values, 0.25),
                   quantile(values, 0.75)};
}

}  // namespace pr
