#pragma once

#include <string>
#include <vector>

namespace pr {

// Shortest round-trip decimal formatting, locale independent. All CSV and
// report output goes through this.
std::string fmt_double(double v);

// Linearly interpolated quantile of an unsorted sample, p in [0, 1].
double quantile(std::vector<double> values, double p);

struct Quartiles {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

Quartiles quartiles(const std::vector<double>& values);

}  // namespace pr
