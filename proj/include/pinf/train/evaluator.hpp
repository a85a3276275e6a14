#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pinf/physics/d2v.hpp"
#include "pinf/render/sampling.hpp"
#include "pinf/scene/dataset.hpp"
#include "pinf/train/config.hpp"
#include "pinf/train/losses.hpp"
#include "pinf/train/models.hpp"

namespace pinf::train {

struct RayItem {
  render::Ray ray;
  int camera = 0;
  int frame = 0;
  int px = 0, py = 0;
  std::array<double, 3> ref{};
  double dt = 0.0;  // warp offset in frames
  std::uint64_t seed = 0;
};

struct PatchItem {
  int camera = 0, frame = 0;
  int x0 = 0, y0 = 0, size = 0, stride = 1;
  std::vector<RayItem> rays;  // row-major, size x size
  Patch<double> ref;
};

/// Everything random about one iteration. Sample positions that depend on the
/// current networks (fine samples, importance-selected residual points) are
/// filled in by the first evaluation and reused afterwards, which keeps
/// repeated evaluations of the same plan smooth in the parameters.
struct BatchPlan {
  int iter = 0;
  bool static_only = false;  // hybrid warmup
  std::vector<RayItem> rays;
  std::optional<PatchItem> patch;
  std::vector<std::array<double, 4>> uniform_points;   // (x, y, z, frame)
  std::vector<std::array<double, 4>> candidate_points;
  bool d2v = false;
  int d2v_frame = 0;

  // Frozen on first use. Indexed over the batch rays followed by the patch rays.
  std::vector<render::RaySampleSet> fine;
  std::vector<char> has_fine;
  bool points_frozen = false;
  std::vector<std::array<double, 4>> residual_points;
};

/// Training pixels that differ from the background by more than `threshold`
/// in some channel, as (camera, frame, x, y).
struct RayPool {
  std::vector<std::array<int, 4>> foreground;
};
RayPool build_ray_pool(const scene::SceneDataset& ds, double threshold = 0.02);

/// Draws rays (a `foreground_fraction` share from the pool), warp offsets,
/// the patch when the cadence hits, residual points and the d2v frame.
BatchPlan make_plan(const scene::SceneDataset& ds, const TrainConfig& cfg, const RayPool& pool, int iter,
                    std::uint64_t seed);

struct LossBreakdown {
  double img = 0.0;
  double vgg = 0.0;
  double ghost = 0.0;
  double transport = 0.0;
  double nse = 0.0;
  double d2v = 0.0;
  double overlay = 0.0;
  double total = 0.0;
};

struct EvalContext {
  const scene::SceneDataset* dataset = nullptr;
  const TrainConfig* config = nullptr;
  LossWeights weights;
  const physics::VelocityPriorOracle* oracle = nullptr;  // null disables L_d2v
  const FeatureExtractor* extractor = nullptr;           // null uses the gradient pyramid
};

/// Evaluates all active loss terms of the plan. With `grads` set, parameter
/// gradients are accumulated into each model's ParamStore (callers zero them).
LossBreakdown evaluate(BatchPlan& plan, ModelSet& models, const EvalContext& ctx, bool grads);

}  // namespace pinf::train
