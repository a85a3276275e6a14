#pragma once

#include <string>
#include <vector>

#include "pinf/common.hpp"

namespace pinf::scene {

/// Scalar or vector field on a uniform cell-centred grid.
/// Data index: ((k * ny + j) * nx + i) * channels + c.
struct GridField {
  int nx = 0, ny = 0, nz = 0;
  int channels = 1;
  Aabb bounds;
  double frame_dt = 1.0;
  std::vector<double> data;

  GridField() = default;
  GridField(int nx_, int ny_, int nz_, int channels_, const Aabb& b, double fill = 0.0);

  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t index(int i, int j, int k, int c = 0) const {
    return ((static_cast<std::size_t>(k) * ny + j) * nx + i) * channels + c;
  }
  double& at(int i, int j, int k, int c = 0) { return data[index(i, j, k, c)]; }
  double at(int i, int j, int k, int c = 0) const { return data[index(i, j, k, c)]; }
  Vec3 spacing() const;
  Vec3 center(int i, int j, int k) const;

  /// Trilinear interpolation between cell centres; queries are clamped to the
  /// hull of the centres.
  double sample(const Vec3& x, int c = 0) const;
  /// Same interpolation in index space, where cell centre (i, j, k) sits at
  /// (i, j, k) exactly.
  double sample_index(double gi, double gj, double gk, int c = 0) const;
  Vec3 sample_vec(const Vec3& x) const;

  /// Throws ArgumentError on bad dims, channels, bounds or data length.
  void validate() const;
  bool same_layout(const GridField& o) const;
  double min_value() const;
  double max_value() const;
  double sum() const;
};

/// NFGRID1 file: magic, int32 nx ny nz channels, 6 x f64 bounds, f64 frame_dt,
/// then f32 data, all little-endian.
void write_grid(const std::string& path, const GridField& g);
GridField read_grid(const std::string& path);

/// One semi-Lagrangian step: backtrace x - u(x) dt from each cell centre and
/// interpolate. u is in scene units per frame, dt in frames. `field` may be
/// scalar or vector; `u` must be a 3-channel grid of the same dims and bounds.
GridField advect_semi_lagrangian(const GridField& field, const GridField& u, double dt);

}  // namespace pinf::scene
