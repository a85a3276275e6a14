#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pinf::train {

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  long skipped = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update. A non-finite gradient entry skips the whole
/// update and increments state.skipped; returns false in that case.
bool adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state, double lr);

}  // namespace pinf::train
