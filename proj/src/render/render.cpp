#include "pinf/render/render.hpp"

#include <algorithm>
#include <cmath>

namespace pinf::render {

namespace {

Eigen::MatrixXd net_inputs(const fields::GrowingMlp& m, std::span<const Vec3> x, const Domain& dom, double frame) {
  const int in = m.shape().in_dim;
  Eigen::MatrixXd X(in, static_cast<Eigen::Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Vec3 n = dom.to_net(x[k]);
    const auto j = static_cast<Eigen::Index>(k);
    for (int a = 0; a < 3; ++a) X(a, j) = n[static_cast<std::size_t>(a)];
    if (in == 4) X(3, j) = dom.t_norm(frame);
  }
  return X;
}

struct Shaded {
  std::vector<double> sigma;
  std::vector<Rgb<double>> color;
};

Shaded shade(const FieldSource& f, const VelocitySource* vel, const RaySampleSet& s, double frame, double dt) {
  std::vector<Vec3> pts(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) pts[k] = s.point(k);
  Shaded out;
  f.radiance(pts, frame, out.sigma, out.color);
  if (vel && dt != 0.0) {
    std::vector<Vec3> u;
    vel->velocity(pts, frame, u);
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = pts[k] + u[k] * dt;
    std::vector<Rgb<double>> unused;
    f.radiance(pts, frame + dt, out.sigma, unused);
  }
  return out;
}

}  // namespace

void MlpRadiance::radiance(std::span<const Vec3> x, double frame, std::vector<double>& sigma,
                           std::vector<Rgb<double>>& color) const {
  fields::MlpTrace tr;
  fields::forward(*model_, net_inputs(*model_, x, dom_, frame), {}, grown_, tr);
  sigma.resize(x.size());
  color.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    for (int c = 0; c < 3; ++c) color[k][static_cast<std::size_t>(c)] = ad::logistic(tr.out(c, j));
    sigma[k] = ad::softplus(tr.out(3, j));
  }
}

void MlpVelocity::velocity(std::span<const Vec3> x, double frame, std::vector<Vec3>& u) const {
  fields::MlpTrace tr;
  fields::forward(*model_, net_inputs(*model_, x, dom_, frame), {}, grown_, tr);
  u.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    for (int a = 0; a < 3; ++a) u[k][static_cast<std::size_t>(a)] = tr.out(a, static_cast<Eigen::Index>(k));
}

double draw_warp_dt(Rng& rng, double frame, const Domain& dom, double dt_std) {
  std::normal_distribution<double> n(0.0, dt_std);
  const double dt = std::clamp(n(rng), -1.0, 1.0);
  const double last = std::max(0, dom.frames - 1);
  return std::clamp(frame + dt, 0.0, last) - frame;
}

RenderedPixel render_ray(const SourceSet& src, const Ray& ray, double frame,
                         const RenderOptions& opt, Rng& rng, double dt) {
  RenderedPixel px;
  if (!ray.hits) {
    px.color = opt.background;
    px.background_only = true;
    return px;
  }
  if (!src.coarse) throw ArgumentError("render_ray: no radiance source");
  const RaySampleSet s = stratified(ray, opt.k_coarse, opt.jitter ? &rng : nullptr);

  auto composite = [&](const FieldSource& f, const FieldSource* stat, const RaySampleSet& set) {
    const Shaded fl = shade(f, src.velocity, set, frame, dt);
    if (!stat) return quadrature<double>(set.delta, fl.sigma, fl.color);
    const Shaded st = shade(*stat, nullptr, set, frame, 0.0);
    return composite_hybrid<double>(set.delta, st.sigma, st.color, fl.sigma, fl.color).composed;
  };

  Composite<double> c = composite(*src.coarse, src.static_coarse, s);
  if (src.fine && opt.k_fine > 0) {
    const RaySampleSet fine = hierarchical_resample(s, c.weights, opt.k_fine, rng);
    const FieldSource* stat = src.static_fine ? src.static_fine : src.static_coarse;
    c = composite(*src.fine, stat, fine);
  }
  px.color = over_background(c, opt.background);
  px.opacity = c.opacity;
  px.trans = c.trans;
  return px;
}

RenderedPixel render_warped(const SourceSet& src, const Ray& ray, const Domain& dom, double t,
                            const RenderOptions& opt, Rng& rng, std::optional<double> forced_dt) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("render_warped: t must lie in [0, 1]");
  const double frame = dom.frame_of(t);
  const double dt = forced_dt ? *forced_dt : draw_warp_dt(rng, frame, dom, opt.dt_std);
  return render_ray(src, ray, frame, opt, rng, dt);
}

Image render_image(const SourceSet& src, const Camera& cam, const Domain& dom, double frame,
                   const RenderOptions& opt, std::uint64_t seed) {
  Image img(cam.width, cam.height);
  const auto fkey = static_cast<std::uint64_t>(std::llround(frame * 1000.0));
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Rng rng(mix_seed(static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(cam.width) + x, fkey, seed));
      const RenderedPixel px = render_ray(src, generate_ray(cam, x, y, dom.box), frame, opt, rng);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = px.color[static_cast<std::size_t>(c)];
    }
  }
  return img;
}

}  // namespace pinf::render
