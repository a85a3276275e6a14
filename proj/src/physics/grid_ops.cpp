#include "pinf/physics/grid_ops.hpp"

#include <cmath>

namespace pinf::physics {

using scene::GridField;

double grid_derivative(const GridField& g, int i, int j, int k, int c, int axis) {
  const int n = axis == 0 ? g.nx : axis == 1 ? g.ny : g.nz;
  const int p = axis == 0 ? i : axis == 1 ? j : k;
  const double h = g.spacing()[static_cast<std::size_t>(axis)];
  auto at = [&](int q) {
    int ii = i, jj = j, kk = k;
    (axis == 0 ? ii : axis == 1 ? jj : kk) = q;
    return g.at(ii, jj, kk, c);
  };
  if (p == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (p == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(p + 1) - at(p - 1)) / (2.0 * h);
}

static void check_vector_grid(const GridField& u) {
  u.validate();
  if (u.channels != 3) throw ArgumentError("grid operator needs a 3-channel grid");
  if (u.nx < 3 || u.ny < 3 || u.nz < 3) throw ArgumentError("grid operator needs at least 3 cells per axis");
}

GridField grid_divergence(const GridField& u) {
  check_vector_grid(u);
  GridField out(u.nx, u.ny, u.nz, 1, u.bounds);
  out.frame_dt = u.frame_dt;
  for (int k = 0; k < u.nz; ++k)
    for (int j = 0; j < u.ny; ++j)
      for (int i = 0; i < u.nx; ++i)
        out.at(i, j, k) =
            grid_derivative(u, i, j, k, 0, 0) + grid_derivative(u, i, j, k, 1, 1) + grid_derivative(u, i, j, k, 2, 2);
  return out;
}

GridField grid_curl(const GridField& u) {
  check_vector_grid(u);
  GridField out(u.nx, u.ny, u.nz, 3, u.bounds);
  out.frame_dt = u.frame_dt;
  for (int k = 0; k < u.nz; ++k)
    for (int j = 0; j < u.ny; ++j)
      for (int i = 0; i < u.nx; ++i) {
        auto d = [&](int c, int a) { return grid_derivative(u, i, j, k, c, a); };
        out.at(i, j, k, 0) = d(2, 1) - d(1, 2);
        out.at(i, j, k, 1) = d(0, 2) - d(2, 0);
        out.at(i, j, k, 2) = d(1, 0) - d(0, 1);
      }
  return out;
}

double mean_abs(const GridField& g) {
  double s = 0.0;
  for (double v : g.data) s += std::abs(v);
  return s / static_cast<double>(g.data.size());
}

}  // namespace pinf::physics
