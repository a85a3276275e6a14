#pragma once

#include "pinf/scene/grid.hpp"

namespace pinf::physics {

/// Second-order central differences in the interior and second-order
/// one-sided differences on the boundary layer. Needs >= 3 cells per axis.
double grid_derivative(const scene::GridField& g, int i, int j, int k, int c, int axis);
scene::GridField grid_divergence(const scene::GridField& u);
scene::GridField grid_curl(const scene::GridField& u);
double mean_abs(const scene::GridField& g);

}  // namespace pinf::physics
