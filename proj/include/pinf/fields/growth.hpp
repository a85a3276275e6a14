#pragma once

#include <vector>

namespace pinf::fields {

/// Position of the sliding window, m_a = 1 + (N-2) s/S, clamped to N-1.
double growth_anchor(double step, double total_steps, int layers);

/// Per-hidden-layer routing weights of the layer-growing schedule:
/// w_m = clamp(1 + m_a - m, 0, 1) * clamp(1 + m - m_a, 0, 1).
/// Layer 0 always gets 0; once step >= total_steps all mass is on layer N-1.
std::vector<double> growth_weights(double step, double total_steps, int layers);

}  // namespace pinf::fields
