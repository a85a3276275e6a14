#include "pinf/train/adam.hpp"

#include <cmath>
#include <cstdio>

#include "pinf/common.hpp"

namespace pinf::train {

bool adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& s, double lr) {
  if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw ArgumentError("adam_step: length mismatch");
  for (double g : grads) {
    if (!std::isfinite(g)) {
      ++s.skipped;
      std::fprintf(stderr, "warning: non-finite gradient, update skipped (%ld so far)\n", s.skipped);
      return false;
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    const double mh = s.m[i] / c1;
    const double vh = s.v[i] / c2;
    params[i] -= lr * mh / (std::sqrt(vh) + s.eps);
  }
  return true;
}

}  // namespace pinf::train
