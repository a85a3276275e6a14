#include "pinf/fields/growth.hpp"

#include <algorithm>

#include "pinf/common.hpp"

namespace pinf::fields {

double growth_anchor(double step, double total_steps, int layers) {
  if (!(total_steps > 0.0)) throw ArgumentError("growth: total steps must be positive");
  if (layers < 2) throw ArgumentError("growth: need at least two hidden layers");
  if (step < 0.0) throw ArgumentError("growth: negative step");
  const double frac = std::min(step / total_steps, 1.0);
  return 1.0 + (layers - 2) * frac;
}

std::vector<double> growth_weights(double step, double total_steps, int layers) {
  const double anchor = growth_anchor(step, total_steps, layers);
  std::vector<double> w(static_cast<std::size_t>(layers), 0.0);
  for (int m = 1; m < layers; ++m) {
    const double up = std::clamp(1.0 + anchor - m, 0.0, 1.0);
    const double down = std::clamp(1.0 + m - anchor, 0.0, 1.0);
    w[static_cast<std::size_t>(m)] = up * down;
  }
  return w;
}

}  // namespace pinf::fields
