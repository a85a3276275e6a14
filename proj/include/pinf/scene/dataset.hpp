#pragma once

#include <array>
#include <string>
#include <vector>

#include "pinf/render/camera.hpp"
#include "pinf/render/image.hpp"
#include "pinf/render/render.hpp"
#include "pinf/scene/flows.hpp"
#include "pinf/scene/grid.hpp"

namespace pinf::scene {

/// Density sequence as a renderer source: trilinear in space, linear between
/// frames, constant emission color, density multiplied by `scale`.
class GridSequenceSource : public render::FieldSource {
 public:
  GridSequenceSource(const std::vector<GridField>* frames, std::array<double, 3> color, double scale = 1.0)
      : frames_(frames), color_(color), scale_(scale) {}
  void radiance(std::span<const Vec3> x, double frame, std::vector<double>& sigma,
                std::vector<render::Rgb<double>>& color) const override;

 private:
  const std::vector<GridField>* frames_;
  std::array<double, 3> color_;
  double scale_;
};

struct SceneDataset {
  std::string name = "toy-plume";
  std::vector<render::Camera> cameras;
  std::vector<bool> held_out;  // per camera; held-out views are not used for training
  std::vector<double> timestamps;  // frame indices, strictly increasing
  std::array<double, 3> background{0.0, 0.0, 0.0};
  Aabb box;
  std::array<double, 3> emission{0.9, 0.9, 0.9};
  double density_scale = 1.0;
  /// images[camera][frame]
  std::vector<std::vector<render::Image>> images;
  std::vector<GridField> gt_sigma;
  std::vector<GridField> gt_velocity;
  /// Hybrid scenes: time-independent obstacle density and its color.
  bool has_static = false;
  GridField static_sigma;
  std::array<double, 3> static_color{0.8, 0.8, 0.8};

  int frames() const { return static_cast<int>(timestamps.size()); }
  render::Domain domain() const { return render::Domain{box, frames()}; }
  std::vector<int> train_cameras() const;
  std::vector<int> test_cameras() const;
  /// Throws ArgumentError on inconsistent counts, sizes or timestamps.
  void validate() const;
};

/// Renders every camera and frame from the ground-truth density (plus the
/// static obstacle when present) over the background.
void render_reference(SceneDataset& ds, int samples_per_ray = 96);

void save_dataset(const SceneDataset& ds, const std::string& dir);
SceneDataset load_dataset(const std::string& dir);

struct ToySceneConfig {
  std::string kind = "plume";  // "plume" or "hybrid"
  int grid = 32;
  int frames = 20;
  int image_size = 48;
  int train_cameras = 5;
  double arc_degrees = 120.0;
  double held_out_degrees = 15.0;
  double camera_radius = 3.2;
  double focal_px = 75.0;
  double density_scale = 6.0;
  std::uint64_t seed = 0;
  PlumeConfig plume;
};

/// Builds the synthetic dataset: simulate (or place) the density, render all views.
SceneDataset make_toy_scene(const ToySceneConfig& cfg);

}  // namespace pinf::scene
