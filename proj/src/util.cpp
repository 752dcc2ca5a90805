#include "relaycheck/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace relaycheck {

std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("empirical_quantile: q must be in (0,1)");
  const auto n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n + 1)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

}  // namespace relaycheck
