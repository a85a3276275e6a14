#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinf/common.hpp"

namespace pinf::render {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Pinhole camera, OpenCV convention: +x right, +y down, +z forward in camera
/// space. `pose` maps camera coordinates to world coordinates.
struct Camera {
  Intrinsics intrinsics;
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  int width = 0;
  int height = 0;

  Vec3 origin() const { return {pose(0, 3), pose(1, 3), pose(2, 3)}; }
  Vec3 forward() const { return {pose(0, 2), pose(1, 2), pose(2, 2)}; }
  /// Throws ArgumentError unless the rotation is orthonormal, focal > 0 and
  /// the resolution is positive.
  void validate() const;
};

/// Camera at `eye` looking at `target`; `up` is the world up direction.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal_px, int width, int height);

/// Cameras evenly spread over an arc of a horizontal circle around the y axis,
/// all looking at the origin. Angles are measured from +z towards +x.
std::vector<Camera> circle_cameras(int count, double radius, double arc_degrees, double height, double focal_px,
                                   int width, int height_px);

struct Ray {
  Vec3 origin{};
  Vec3 dir{};  // unit length
  double near = 0.0;
  double far = 0.0;
  bool hits = false;  // false marks a background-only pixel
};

/// Slab intersection of a ray with a box; nullopt when the ray misses or the
/// box lies behind the origin. Entry is clamped to >= 0.
std::optional<std::pair<double, double>> intersect_box(const Vec3& origin, const Vec3& dir, const Aabb& box);

/// Ray through the centre of pixel (col, row), clipped to the domain box.
Ray generate_ray(const Camera& cam, int col, int row, const Aabb& box);

std::string camera_to_json(const Camera& cam);
Camera camera_from_json(const std::string& text);

}  // namespace pinf::render
