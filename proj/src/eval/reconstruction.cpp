#include "pinf/eval/reconstruction.hpp"

#include <cmath>

namespace pinf::eval {

render::Image render_view(const train::ModelSet& m, const render::Camera& cam, double frame,
                          const std::array<double, 3>& background, const ViewOptions& opt) {
  const render::MlpRadiance coarse(m.vis_coarse, m.domain, m.vis_grown());
  const render::MlpRadiance fine(m.vis_fine, m.domain, m.vis_grown());
  const render::MlpRadiance sc(m.static_coarse, m.domain, m.static_coarse.growth_enabled());
  const render::MlpRadiance sf(m.static_fine, m.domain, m.static_fine.growth_enabled());
  render::SourceSet src;
  src.coarse = &coarse;
  src.fine = &fine;
  if (m.hybrid) {
    src.static_coarse = &sc;
    src.static_fine = &sf;
  }
  render::RenderOptions ro;
  ro.k_coarse = opt.k_coarse;
  ro.k_fine = opt.k_fine;
  ro.background = background;
  ro.jitter = false;
  return render::render_image(src, cam, m.domain, frame, ro, opt.seed);
}

double heldout_psnr(const train::ModelSet& m, const scene::SceneDataset& ds, int frame_stride, const ViewOptions& opt) {
  if (frame_stride < 1) throw ArgumentError("heldout_psnr: frame stride must be >= 1");
  const auto cams = ds.test_cameras();
  if (cams.empty()) throw ArgumentError("heldout_psnr: dataset has no held-out camera");
  double s = 0.0;
  int n = 0;
  for (int c : cams)
    for (int f = 0; f < ds.frames(); f += frame_stride) {
      const auto img = render_view(m, ds.cameras[static_cast<std::size_t>(c)], f, ds.background, opt);
      s += render::psnr(img, ds.images[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)]);
      ++n;
    }
  return s / n;
}

SampledSequence sample_sequence(const train::ModelSet& m, const scene::SceneDataset& ds) {
  if (ds.gt_sigma.empty()) throw ArgumentError("sample_sequence: dataset has no ground-truth grid");
  const auto& g = ds.gt_sigma.front();
  SampledSequence s;
  for (int f = 0; f < ds.frames(); ++f) {
    s.sigma.push_back(sample_to_grid(m.vis_fine, m.domain, g.nx, g.ny, g.nz, g.bounds, f, SampleOutput::Density));
    s.velocity.push_back(sample_to_grid(m.hid, m.domain, g.nx, g.ny, g.nz, g.bounds, f, SampleOutput::Velocity));
  }
  return s;
}

GridField sample_static(const train::ModelSet& m, const scene::SceneDataset& ds) {
  if (!m.hybrid) throw ArgumentError("sample_static: models are not hybrid");
  if (ds.gt_sigma.empty()) throw ArgumentError("sample_static: dataset has no ground-truth grid");
  const auto& g = ds.gt_sigma.front();
  return sample_to_grid(m.static_fine, m.domain, g.nx, g.ny, g.nz, g.bounds, 0.0, SampleOutput::Density);
}

std::vector<GridField> reference_density(const scene::SceneDataset& ds) {
  std::vector<GridField> out = ds.gt_sigma;
  for (auto& g : out)
    for (double& v : g.data) v *= ds.density_scale;
  return out;
}

double sequence_velocity_cosine(const std::vector<GridField>& u, const scene::SceneDataset& ds, double mask_fraction) {
  if (u.size() != ds.gt_velocity.size() || ds.gt_sigma.size() != u.size())
    throw ArgumentError("sequence_velocity_cosine: frame counts differ");
  // Pooled over frames; cells without reference motion carry no direction.
  double cos_sum = 0.0;
  std::size_t cells = 0;
  for (std::size_t f = 0; f < u.size(); ++f) {
    GridField mask = threshold_mask(ds.gt_sigma[f], mask_fraction);
    const auto& ref = ds.gt_velocity[f];
    for (std::size_t c = 0; c < mask.cells(); ++c) {
      const double* v = &ref.data[3 * c];
      const double n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
      if (n2 <= 1e-24) mask.data[c] = 0.0;
    }
    const std::size_t n = masked_count(mask, &mask);
    if (n == 0) continue;
    cos_sum += velocity_cosine(u[f], ref, &mask) * static_cast<double>(n);
    cells += n;
  }
  return cells ? cos_sum / static_cast<double>(cells) : 0.0;
}

ReconstructionReport evaluate_reconstruction(const train::ModelSet& m, const scene::SceneDataset& ds,
                                             double mask_fraction) {
  if (ds.gt_velocity.size() != ds.gt_sigma.size()) throw ArgumentError("evaluate_reconstruction: ground truth incomplete");
  const auto s = sample_sequence(m, ds);
  const auto ref = reference_density(ds);
  ReconstructionReport r;
  r.metrics = evaluate_sequence(s.sigma, s.velocity, ref, ds.gt_velocity, ds.timestamps);
  r.velocity_cosine = sequence_velocity_cosine(s.velocity, ds, mask_fraction);
  r.mean_divergence = r.metrics.means.div;
  return r;
}

}  // namespace pinf::eval
