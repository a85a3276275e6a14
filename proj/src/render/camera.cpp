#include "pinf/render/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"

namespace pinf::render {

void Camera::validate() const {
  const Eigen::Matrix3d R = pose.block<3, 3>(0, 0);
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() > 1e-9) {
    throw ArgumentError("camera rotation is not orthonormal");
  }
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) throw ArgumentError("camera focal length must be positive");
  if (width <= 0 || height <= 0) throw ArgumentError("camera resolution must be positive");
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal_px, int width, int height) {
  const Vec3 fwd = normalized(target - eye);
  const Vec3 right = normalized(cross(fwd, up));
  const Vec3 down = cross(fwd, right);
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.intrinsics = {focal_px, focal_px, 0.5 * width, 0.5 * height};
  for (int i = 0; i < 3; ++i) {
    cam.pose(i, 0) = right[static_cast<std::size_t>(i)];
    cam.pose(i, 1) = down[static_cast<std::size_t>(i)];
    cam.pose(i, 2) = fwd[static_cast<std::size_t>(i)];
    cam.pose(i, 3) = eye[static_cast<std::size_t>(i)];
  }
  return cam;
}

std::vector<Camera> circle_cameras(int count, double radius, double arc_degrees, double height, double focal_px,
                                   int width, int height_px) {
  std::vector<Camera> cams;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < count; ++i) {
    const double frac = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    const double ang = (frac - 0.5) * arc_degrees * pi / 180.0;
    const Vec3 eye{radius * std::sin(ang), height, radius * std::cos(ang)};
    cams.push_back(look_at(eye, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, focal_px, width, height_px));
  }
  return cams;
}

std::optional<std::pair<double, double>> intersect_box(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[a] - origin[a]) / dir[a];
    double tb = (box.hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (!(t0 < t1)) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

Ray generate_ray(const Camera& cam, int col, int row, const Aabb& box) {
  if (box.empty()) throw ArgumentError("generate_ray: empty domain box");
  const auto& k = cam.intrinsics;
  const Eigen::Vector3d dc((col + 0.5 - k.cx) / k.fx, (row + 0.5 - k.cy) / k.fy, 1.0);
  const Eigen::Vector3d dw = (cam.pose.block<3, 3>(0, 0) * dc).normalized();
  Ray r;
  r.origin = cam.origin();
  r.dir = {dw.x(), dw.y(), dw.z()};
  if (auto hit = intersect_box(r.origin, r.dir, box)) {
    r.near = hit->first;
    r.far = hit->second;
    r.hits = true;
  }
  return r;
}

std::string camera_to_json(const Camera& cam) {
  nlohmann::json j;
  const auto& k = cam.intrinsics;
  j["K"] = {{k.fx, 0.0, k.cx}, {0.0, k.fy, k.cy}, {0.0, 0.0, 1.0}};
  nlohmann::json pose = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) pose.push_back({cam.pose(r, 0), cam.pose(r, 1), cam.pose(r, 2), cam.pose(r, 3)});
  j["pose"] = pose;
  j["width"] = cam.width;
  j["height"] = cam.height;
  return j.dump();
}

Camera camera_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Camera cam;
    const auto& K = j.at("K");
    cam.intrinsics = {K.at(0).at(0).get<double>(), K.at(1).at(1).get<double>(), K.at(0).at(2).get<double>(),
                      K.at(1).at(2).get<double>()};
    const auto& P = j.at("pose");
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) cam.pose(r, c) = P.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.validate();
    return cam;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("camera json: ") + e.what());
  }
}

}  // namespace pinf::render
