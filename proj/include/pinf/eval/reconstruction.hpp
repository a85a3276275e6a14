#pragma once

#include <vector>

#include "pinf/eval/metrics.hpp"
#include "pinf/render/render.hpp"
#include "pinf/scene/dataset.hpp"
#include "pinf/train/models.hpp"

namespace pinf::eval {

struct ViewOptions {
  int k_coarse = 32;
  int k_fine = 32;
  std::uint64_t seed = 0;
};

/// Deterministic (unjittered) render of the trained models from one camera.
render::Image render_view(const train::ModelSet& m, const render::Camera& cam, double frame,
                          const std::array<double, 3>& background, const ViewOptions& opt = {});

/// Mean PSNR over the held-out cameras and every `frame_stride`-th frame.
double heldout_psnr(const train::ModelSet& m, const scene::SceneDataset& ds, int frame_stride = 1,
                    const ViewOptions& opt = {});

/// Fluid density (vis_fine) and velocity (hid) sampled on the ground-truth grid.
struct SampledSequence {
  std::vector<GridField> sigma;
  std::vector<GridField> velocity;
};
SampledSequence sample_sequence(const train::ModelSet& m, const scene::SceneDataset& ds);
/// Static density (static_fine) on the ground-truth grid; hybrid models only.
GridField sample_static(const train::ModelSet& m, const scene::SceneDataset& ds);

/// Ground-truth density in render units (gt_sigma times density_scale).
std::vector<GridField> reference_density(const scene::SceneDataset& ds);

/// Mean cosine against the ground-truth velocity, pooled over all frames'
/// cells where sigma_gt exceeds `mask_fraction` of that frame's max and the
/// reference velocity is nonzero.
double sequence_velocity_cosine(const std::vector<GridField>& u, const scene::SceneDataset& ds,
                                double mask_fraction = 0.1);

struct ReconstructionReport {
  MetricsReport metrics;      // against the ground truth, unmasked
  double velocity_cosine = 0.0;  // sequence_velocity_cosine
  double mean_divergence = 0.0;  // mean over frames, unmasked
};
ReconstructionReport evaluate_reconstruction(const train::ModelSet& m, const scene::SceneDataset& ds,
                                             double mask_fraction = 0.1);

}  // namespace pinf::eval
