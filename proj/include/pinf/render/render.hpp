#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "pinf/fields/mlp.hpp"
#include "pinf/render/domain.hpp"
#include "pinf/render/image.hpp"
#include "pinf/render/quadrature.hpp"
#include "pinf/render/sampling.hpp"

namespace pinf::render {

/// Anything the renderer can query at scene-space points.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual void radiance(std::span<const Vec3> x, double frame, std::vector<double>& sigma,
                        std::vector<Rgb<double>>& color) const = 0;
};

class VelocitySource {
 public:
  virtual ~VelocitySource() = default;
  /// Velocity in scene units per frame.
  virtual void velocity(std::span<const Vec3> x, double frame, std::vector<Vec3>& u) const = 0;
};

/// Radiance network adapter (4D fluid model or 3D static model).
class MlpRadiance : public FieldSource {
 public:
  MlpRadiance(const fields::GrowingMlp& model, const Domain& dom, bool grown)
      : model_(&model), dom_(dom), grown_(grown) {}
  void radiance(std::span<const Vec3> x, double frame, std::vector<double>& sigma,
                std::vector<Rgb<double>>& color) const override;

 private:
  const fields::GrowingMlp* model_;
  Domain dom_;
  bool grown_;
};

class MlpVelocity : public VelocitySource {
 public:
  MlpVelocity(const fields::GrowingMlp& model, const Domain& dom, bool grown)
      : model_(&model), dom_(dom), grown_(grown) {}
  void velocity(std::span<const Vec3> x, double frame, std::vector<Vec3>& u) const override;

 private:
  const fields::GrowingMlp* model_;
  Domain dom_;
  bool grown_;
};

/// Sources used for one render. A null fine source disables hierarchical
/// sampling; a velocity source enables warping; a static source turns the
/// render into a hybrid composite.
struct SourceSet {
  const FieldSource* coarse = nullptr;
  const FieldSource* fine = nullptr;
  const FieldSource* static_coarse = nullptr;
  const FieldSource* static_fine = nullptr;
  const VelocitySource* velocity = nullptr;
};

struct RenderOptions {
  int k_coarse = 32;
  int k_fine = 32;
  std::array<double, 3> background{0.0, 0.0, 0.0};
  bool jitter = true;
  double dt_std = 0.5;  // frames
};

struct RenderedPixel {
  std::array<double, 3> color{};  // composited over the background
  double opacity = 0.0;
  std::vector<double> trans;
  bool background_only = false;
};

/// Warp offset in frames: N(0, dt_std) clamped to [-1, 1] and to the frame range.
double draw_warp_dt(Rng& rng, double frame, const Domain& dom, double dt_std);

/// Renders one ray at `frame`. With a velocity source and dt != 0, density is
/// read at (x + u dt, frame + dt) while color stays at (x, frame).
RenderedPixel render_ray(const SourceSet& src, const Ray& ray, double frame,
                         const RenderOptions& opt, Rng& rng, double dt = 0.0);

/// Warped render at normalised time t in [0, 1]; `forced_dt` replaces the draw.
RenderedPixel render_warped(const SourceSet& src, const Ray& ray, const Domain& dom, double t,
                            const RenderOptions& opt, Rng& rng, std::optional<double> forced_dt = std::nullopt);

/// Unwarped image from one camera. Per-ray RNG streams come from (pixel, frame, seed).
Image render_image(const SourceSet& src, const Camera& cam, const Domain& dom, double frame,
                   const RenderOptions& opt, std::uint64_t seed);

}  // namespace pinf::render
