#include "pinf/eval/viz.hpp"

#include <algorithm>
#include <cmath>

#include "pinf/physics/grid_ops.hpp"

namespace pinf::eval {

namespace {

// Slice plane (rows, cols) and the normal axis for each view.
struct Plane {
  int normal, col_axis, row_axis;
};

Plane plane_of(SliceAxis a) {
  switch (a) {
    case SliceAxis::Front: return {2, 0, 1};
    case SliceAxis::Side: return {0, 2, 1};
    case SliceAxis::Top: return {1, 0, 2};
  }
  return {2, 0, 1};
}

std::array<int, 3> dims(const scene::GridField& g) { return {g.nx, g.ny, g.nz}; }

template <class F>
render::Image draw(const scene::GridField& g, SliceAxis axis, int scale, F&& shade) {
  if (scale < 1) throw ArgumentError("slice scale must be >= 1");
  const Plane p = plane_of(axis);
  const auto d = dims(g);
  const int W = d[static_cast<std::size_t>(p.col_axis)], H = d[static_cast<std::size_t>(p.row_axis)];
  render::Image img(W * scale, H * scale);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      std::array<int, 3> idx{};
      idx[static_cast<std::size_t>(p.normal)] = d[static_cast<std::size_t>(p.normal)] / 2;
      idx[static_cast<std::size_t>(p.col_axis)] = c;
      // Image rows run top-down; y (or z for the top view) grows upward.
      idx[static_cast<std::size_t>(p.row_axis)] = H - 1 - r;
      const std::array<double, 3> rgb = shade(idx[0], idx[1], idx[2], p.normal);
      for (int y = 0; y < scale; ++y)
        for (int x = 0; x < scale; ++x)
          for (int ch = 0; ch < 3; ++ch) img.at(c * scale + x, r * scale + y, ch) = std::clamp(rgb[static_cast<std::size_t>(ch)], 0.0, 1.0);
    }
  return img;
}

}  // namespace

double max_abs(const scene::GridField& g) {
  double m = 0.0;
  for (double v : g.data) m = std::max(m, std::abs(v));
  return m;
}

render::Image velocity_slice(const scene::GridField& u, const scene::GridField* density, SliceAxis axis, double range,
                             int scale) {
  if (u.channels != 3) throw ArgumentError("velocity_slice: need a 3-channel grid");
  if (density && (density->nx != u.nx || density->ny != u.ny || density->nz != u.nz))
    throw ArgumentError("velocity_slice: density dims differ");
  const double inv = range > 0.0 ? 1.0 / range : 0.0;
  return draw(u, axis, scale, [&](int i, int j, int k, int) {
    std::array<double, 3> rgb{};
    for (int c = 0; c < 3; ++c) rgb[static_cast<std::size_t>(c)] = 0.5 + 0.5 * u.at(i, j, k, c) * inv;
    if (density && density->at(i, j, k) <= 1e-3)
      for (double& v : rgb) v *= 0.3;
    return rgb;
  });
}

render::Image vorticity_slice(const scene::GridField& u, SliceAxis axis, double range, int scale) {
  const scene::GridField w = physics::grid_curl(u);
  const double inv = range > 0.0 ? 1.0 / range : 0.0;
  return draw(w, axis, scale, [&](int i, int j, int k, int normal) {
    const double v = std::clamp(w.at(i, j, k, normal) * inv, -1.0, 1.0);
    // Diverging palette: blue (-1) through white (0) to red (+1).
    if (v >= 0.0) return std::array<double, 3>{1.0, 1.0 - v, 1.0 - v};
    return std::array<double, 3>{1.0 + v, 1.0 + v, 1.0};
  });
}

}  // namespace pinf::eval
