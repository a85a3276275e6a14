#pragma once

#include "pinf/common.hpp"

namespace pinf::render {

/// Maps scene coordinates and frame indices onto the network input space:
/// positions to [-1, 1]^3 over the domain box, frames to [0, 1].
struct Domain {
  Aabb box;
  int frames = 2;

  Vec3 to_net(const Vec3& x) const {
    Vec3 n;
    for (std::size_t a = 0; a < 3; ++a) n[a] = 2.0 * (x[a] - box.lo[a]) / (box.hi[a] - box.lo[a]) - 1.0;
    return n;
  }
  Vec3 from_net(const Vec3& n) const {
    Vec3 x;
    for (std::size_t a = 0; a < 3; ++a) x[a] = box.lo[a] + 0.5 * (n[a] + 1.0) * (box.hi[a] - box.lo[a]);
    return x;
  }
  double t_norm(double frame) const { return frames > 1 ? frame / (frames - 1) : 0.0; }
  double frame_of(double t) const { return t * (frames > 1 ? frames - 1 : 0); }
  /// d(net coordinate)/d(scene coordinate) along axis a.
  double space_scale(std::size_t a) const { return 2.0 / (box.hi[a] - box.lo[a]); }
  /// d(t_norm)/d(frame).
  double time_scale() const { return frames > 1 ? 1.0 / (frames - 1) : 1.0; }
};

}  // namespace pinf::render
