#include "pinf/train/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pinf/physics/residuals.hpp"
#include "pinf/render/render.hpp"

namespace pinf::train {

using ad::Var;
using Eigen::MatrixXd;
using render::Composite;
using render::Rgb;

RayPool build_ray_pool(const scene::SceneDataset& ds, double threshold) {
  RayPool pool;
  for (int cam : ds.train_cameras()) {
    for (int f = 0; f < ds.frames(); ++f) {
      const auto& img = ds.images[static_cast<std::size_t>(cam)][static_cast<std::size_t>(f)];
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          bool fg = false;
          for (int c = 0; c < 3; ++c) fg = fg || std::abs(img.at(x, y, c) - ds.background[static_cast<std::size_t>(c)]) > threshold;
          if (fg) pool.foreground.push_back({cam, f, x, y});
        }
    }
  }
  return pool;
}

namespace {

RayItem make_ray(const scene::SceneDataset& ds, const TrainConfig& cfg, render::Rng& rng, int cam, int frame, int x,
                 int y) {
  RayItem r;
  r.camera = cam;
  r.frame = frame;
  r.px = x;
  r.py = y;
  r.ray = render::generate_ray(ds.cameras[static_cast<std::size_t>(cam)], x, y, ds.box);
  const auto& img = ds.images[static_cast<std::size_t>(cam)][static_cast<std::size_t>(frame)];
  for (int c = 0; c < 3; ++c) r.ref[static_cast<std::size_t>(c)] = img.at(x, y, c);
  r.dt = cfg.warp ? render::draw_warp_dt(rng, frame, ds.domain(), cfg.dt_std) : 0.0;
  r.seed = rng();
  return r;
}

std::array<double, 4> random_point(const scene::SceneDataset& ds, render::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 4> p{};
  for (std::size_t a = 0; a < 3; ++a) p[a] = ds.box.lo[a] + u(rng) * (ds.box.hi[a] - ds.box.lo[a]);
  p[3] = u(rng) * std::max(0, ds.frames() - 1);
  return p;
}

}  // namespace

BatchPlan make_plan(const scene::SceneDataset& ds, const TrainConfig& cfg, const RayPool& pool, int iter,
                    std::uint64_t seed) {
  BatchPlan plan;
  plan.iter = iter;
  plan.static_only = cfg.hybrid && iter < cfg.warmup_iters();
  render::Rng rng(mix_seed(seed, static_cast<std::uint64_t>(iter), 0x7a11));
  const std::vector<int> cams = ds.train_cameras();
  if (cams.empty()) throw ArgumentError("dataset has no training cameras");
  const int F = ds.frames();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick = [&](int n) { return std::min(n - 1, static_cast<int>(u01(rng) * n)); };

  for (int r = 0; r < cfg.rays_per_batch; ++r) {
    if (!pool.foreground.empty() && u01(rng) < cfg.foreground_fraction) {
      const auto& e = pool.foreground[static_cast<std::size_t>(pick(static_cast<int>(pool.foreground.size())))];
      plan.rays.push_back(make_ray(ds, cfg, rng, e[0], e[1], e[2], e[3]));
    } else {
      const int cam = cams[static_cast<std::size_t>(pick(static_cast<int>(cams.size())))];
      const auto& c = ds.cameras[static_cast<std::size_t>(cam)];
      const int f = pick(F);
      const int x = pick(c.width);
      const int y = pick(c.height);
      plan.rays.push_back(make_ray(ds, cfg, rng, cam, f, x, y));
    }
  }

  if (cfg.patch_every > 0 && iter % cfg.patch_every == 0) {
    PatchItem p;
    p.camera = cams[static_cast<std::size_t>(pick(static_cast<int>(cams.size())))];
    p.frame = pick(F);
    p.size = cfg.patch_size;
    p.stride = cfg.patch_stride_min + pick(cfg.patch_stride_max - cfg.patch_stride_min + 1);
    const auto& cam = ds.cameras[static_cast<std::size_t>(p.camera)];
    const int span = (p.size - 1) * p.stride + 1;
    if (span > cam.width || span > cam.height) throw ArgumentError("patch does not fit in the training images");
    p.x0 = pick(cam.width - span + 1);
    p.y0 = pick(cam.height - span + 1);
    p.ref.rows = p.ref.cols = p.size;
    for (int r = 0; r < p.size; ++r)
      for (int c = 0; c < p.size; ++c) {
        RayItem item = make_ray(ds, cfg, rng, p.camera, p.frame, p.x0 + c * p.stride, p.y0 + r * p.stride);
        for (double v : item.ref) p.ref.rgb.push_back(v);
        p.rays.push_back(item);
      }
    plan.patch = std::move(p);
  }

  const int n_imp = static_cast<int>(std::lround(cfg.residual_points * cfg.importance_fraction));
  for (int i = 0; i < cfg.residual_points - n_imp; ++i) plan.uniform_points.push_back(random_point(ds, rng));
  for (int i = 0; i < 2 * n_imp; ++i) plan.candidate_points.push_back(random_point(ds, rng));

  plan.d2v = iter % cfg.d2v_every == 0;
  plan.d2v_frame = pick(F);
  return plan;
}

namespace {

/// One batched network evaluation whose outputs enter the tape as leaves.
struct Block {
  fields::GrowingMlp* model = nullptr;
  fields::MlpTrace tr;
  std::vector<Var> leaf;               // out_dim x P, column-major
  std::vector<std::vector<Var>> dleaf;  // per direction, same layout

  bool active() const { return model != nullptr; }
  int out_dim() const { return model->shape().out_dim; }

  void run(fields::GrowingMlp* m, const MatrixXd& X, std::span<const Eigen::VectorXd> dirs = {}) {
    model = m;
    fields::forward(*m, X, dirs, m->growth_enabled(), tr);
    leaf.assign(static_cast<std::size_t>(out_dim()) * X.cols(), Var{});
    dleaf.assign(dirs.size(), std::vector<Var>(leaf.size(), Var{}));
  }
  Var out(ad::Tape& t, int row, Eigen::Index col) {
    Var& l = leaf[static_cast<std::size_t>(col * out_dim() + row)];
    if (l.index < 0) l = t.input(tr.out(row, col));
    return l;
  }
  Var dout(ad::Tape& t, std::size_t dir, int row, Eigen::Index col) {
    Var& l = dleaf[dir][static_cast<std::size_t>(col * out_dim() + row)];
    if (l.index < 0) l = t.input(tr.out_dot[dir](row, col));
    return l;
  }
  MatrixXd harvest(const ad::Tape& t, const std::vector<Var>& ls) const {
    MatrixXd a = MatrixXd::Zero(out_dim(), tr.points);
    for (std::size_t i = 0; i < ls.size(); ++i)
      if (ls[i].index >= 0) a(static_cast<Eigen::Index>(i % out_dim()), static_cast<Eigen::Index>(i / out_dim())) = t.adjoint(ls[i]);
    return a;
  }
  void backward(const ad::Tape& t, MatrixXd* input_adj = nullptr) {
    const MatrixXd adj = harvest(t, leaf);
    std::vector<MatrixXd> dadj;
    for (const auto& d : dleaf) dadj.push_back(harvest(t, d));
    fields::backward(*model, tr, adj, dadj, input_adj);
  }
};

Eigen::VectorXd dir4(int a) { return fields::axis(4, a); }

/// Rendering of a set of rays with one level of models (coarse or fine).
struct Stage {
  Block hid, vis_w, vis_c, stat;
  bool warp = false;
  std::vector<double> dt_col;
  std::vector<char> valid;
  std::vector<Composite<Var>> comp;  // what the pixel shows
  std::vector<render::HybridComposite<Var>> hyb;
  bool hybrid = false;

  void run(ad::Tape& tape, const std::vector<const RayItem*>& rays, const std::vector<render::RaySampleSet>& sets,
           fields::GrowingMlp* vis, fields::GrowingMlp* hid_model, fields::GrowingMlp* stat_model,
           const render::Domain& dom) {
    std::vector<Vec3> pts;
    std::vector<double> frames;
    std::vector<std::size_t> start(rays.size() + 1, 0);
    valid.assign(rays.size(), 0);
    for (std::size_t i = 0; i < rays.size(); ++i) {
      start[i] = pts.size();
      if (rays[i]->ray.hits && sets[i].size() > 0) {
        valid[i] = 1;
        for (std::size_t k = 0; k < sets[i].size(); ++k) {
          pts.push_back(sets[i].point(k));
          frames.push_back(rays[i]->frame);
          dt_col.push_back(rays[i]->dt);
        }
      }
    }
    start[rays.size()] = pts.size();
    const auto P = static_cast<Eigen::Index>(pts.size());
    warp = vis && hid_model;
    hybrid = vis && stat_model;
    if (P > 0) {
      MatrixXd X4(4, P), X3(3, P);
      for (Eigen::Index j = 0; j < P; ++j) {
        const Vec3 n = dom.to_net(pts[static_cast<std::size_t>(j)]);
        for (int a = 0; a < 3; ++a) X4(a, j) = X3(a, j) = n[static_cast<std::size_t>(a)];
        X4(3, j) = dom.t_norm(frames[static_cast<std::size_t>(j)]);
      }
      if (vis) vis_c.run(vis, X4);
      if (warp) {
        hid.run(hid_model, X4);
        MatrixXd Xw(4, P);
        for (Eigen::Index j = 0; j < P; ++j) {
          const double dt = dt_col[static_cast<std::size_t>(j)];
          Vec3 x = pts[static_cast<std::size_t>(j)];
          for (std::size_t a = 0; a < 3; ++a) x[a] += hid.tr.out(static_cast<Eigen::Index>(a), j) * dt;
          const Vec3 n = dom.to_net(x);
          for (int a = 0; a < 3; ++a) Xw(a, j) = n[static_cast<std::size_t>(a)];
          Xw(3, j) = dom.t_norm(frames[static_cast<std::size_t>(j)] + dt);
        }
        vis_w.run(vis, Xw);
      }
      if (stat_model) stat.run(stat_model, X3);
    }

    comp.assign(rays.size(), Composite<Var>{});
    hyb.assign(hybrid ? rays.size() : 0, render::HybridComposite<Var>{});
    for (std::size_t i = 0; i < rays.size(); ++i) {
      if (!valid[i]) continue;
      const std::size_t K = start[i + 1] - start[i];
      std::vector<Var> sf, ss;
      std::vector<Rgb<Var>> cf, cs;
      for (std::size_t k = 0; k < K; ++k) {
        const auto j = static_cast<Eigen::Index>(start[i] + k);
        if (vis) {
          Block& sb = warp ? vis_w : vis_c;
          sf.push_back(ad::softplus(sb.out(tape, 3, j)));
          cf.push_back({ad::logistic(vis_c.out(tape, 0, j)), ad::logistic(vis_c.out(tape, 1, j)),
                        ad::logistic(vis_c.out(tape, 2, j))});
        }
        if (stat_model) {
          ss.push_back(ad::softplus(stat.out(tape, 3, j)));
          cs.push_back({ad::logistic(stat.out(tape, 0, j)), ad::logistic(stat.out(tape, 1, j)),
                        ad::logistic(stat.out(tape, 2, j))});
        }
      }
      const std::span<const double> delta = sets[i].delta;
      if (hybrid) {
        hyb[i] = render::composite_hybrid<Var>(delta, ss, cs, sf, cf);
        comp[i] = hyb[i].composed;
      } else if (vis) {
        comp[i] = render::quadrature<Var>(delta, sf, cf);
      } else {
        comp[i] = render::quadrature<Var>(delta, ss, cs);
      }
    }
  }

  void backward(const ad::Tape& tape, const render::Domain& dom) {
    if (vis_c.active()) vis_c.backward(tape);
    if (warp) {
      MatrixXd in_adj;
      vis_w.backward(tape, &in_adj);
      // x_w = x + u dt enters the network as to_net(x_w).
      MatrixXd u_adj(3, in_adj.cols());
      for (Eigen::Index j = 0; j < in_adj.cols(); ++j)
        for (int a = 0; a < 3; ++a)
          u_adj(a, j) = in_adj(a, j) * dom.space_scale(static_cast<std::size_t>(a)) * dt_col[static_cast<std::size_t>(j)];
      fields::backward(*hid.model, hid.tr, u_adj, {}, nullptr);
    }
    if (stat.active()) stat.backward(tape);
  }
};

Rgb<Var> pixel(ad::Tape& tape, const Stage& st, std::size_t i, const std::array<double, 3>& bg) {
  if (!st.valid[i]) return {tape.constant(bg[0]), tape.constant(bg[1]), tape.constant(bg[2])};
  return render::over_background(st.comp[i], bg);
}

/// Residual-point losses: transport, NSE and overlay.
struct Residuals {
  Block hid, vis, stat;
  Var transport, nse, overlay;
  bool has_transport = false, has_nse = false, has_overlay = false;

  void run(ad::Tape& tape, const std::vector<std::array<double, 4>>& pts, ModelSet& m, const LossWeights& w) {
    const auto P = static_cast<Eigen::Index>(pts.size());
    const render::Domain& dom = m.domain;
    has_transport = w.transport > 0.0;
    has_nse = w.nse > 0.0;
    has_overlay = m.hybrid && w.overlay > 0.0;
    if (P == 0 || !(has_transport || has_nse || has_overlay)) return;
    MatrixXd X4(4, P), X3(3, P);
    for (Eigen::Index j = 0; j < P; ++j) {
      const auto& p = pts[static_cast<std::size_t>(j)];
      const Vec3 n = dom.to_net({p[0], p[1], p[2]});
      for (int a = 0; a < 3; ++a) X4(a, j) = X3(a, j) = n[static_cast<std::size_t>(a)];
      X4(3, j) = dom.t_norm(p[3]);
    }
    const std::vector<Eigen::VectorXd> dirs{dir4(0), dir4(1), dir4(2), dir4(3)};
    const std::array<double, 4> scale{dom.space_scale(0), dom.space_scale(1), dom.space_scale(2), dom.time_scale()};
    if (has_transport || has_nse) hid.run(&m.hid, X4, dirs);
    if (has_transport) {
      vis.run(&m.vis_fine, X4, dirs);
    } else if (has_overlay) {
      vis.run(&m.vis_fine, X4);
    }
    if (has_overlay) stat.run(&m.static_fine, X3);

    Var tsum = tape.zero(), nsum = tape.zero(), osum = tape.zero();
    for (Eigen::Index j = 0; j < P; ++j) {
      physics::VecJet<Var> u;
      if (has_transport || has_nse) {
        for (int c = 0; c < 3; ++c) {
          u[static_cast<std::size_t>(c)].v = hid.out(tape, c, j);
          for (std::size_t a = 0; a < 4; ++a) u[static_cast<std::size_t>(c)].d[a] = hid.dout(tape, a, c, j) * scale[a];
        }
      }
      if (has_transport) {
        // Density jet enters as constants: no gradient reaches the density model.
        const double raw = vis.tr.out(3, j);
        const double ds = ad::logistic(raw);
        physics::Jet<Var> s;
        s.v = tape.constant(ad::softplus(raw));
        for (std::size_t a = 0; a < 4; ++a) s.d[a] = tape.constant(ds * vis.tr.out_dot[a](3, j) * scale[a]);
        tsum = tsum + physics::transport_term(s, u);
      }
      if (has_nse) nsum = nsum + physics::nse_term(u, w.div);
      if (has_overlay) {
        const Var ss = ad::softplus(stat.out(tape, 3, j));
        const Var sf = ad::softplus(vis.out(tape, 3, j));
        osum = osum + physics::overlay_term(ss, sf);
      }
    }
    const double inv = 1.0 / static_cast<double>(P);
    transport = tsum * inv;
    nse = nsum * inv;
    overlay = osum * inv;
  }

  void backward(const ad::Tape& tape) {
    if (hid.active()) hid.backward(tape);
    // The density block only carries gradients from the overlay term.
    if (vis.active() && has_overlay) {
      const MatrixXd adj = vis.harvest(tape, vis.leaf);
      fields::backward(*vis.model, vis.tr, adj, {}, nullptr);
    }
    if (stat.active()) stat.backward(tape);
  }
};

/// Selects the candidate half with the highest density.
void freeze_points(BatchPlan& plan, ModelSet& m) {
  plan.residual_points = plan.uniform_points;
  const auto C = static_cast<Eigen::Index>(plan.candidate_points.size());
  if (C > 0) {
    MatrixXd X(4, C);
    for (Eigen::Index j = 0; j < C; ++j) {
      const auto& p = plan.candidate_points[static_cast<std::size_t>(j)];
      const Vec3 n = m.domain.to_net({p[0], p[1], p[2]});
      for (int a = 0; a < 3; ++a) X(a, j) = n[static_cast<std::size_t>(a)];
      X(3, j) = m.domain.t_norm(p[3]);
    }
    fields::MlpTrace tr;
    fields::forward(m.vis_fine, X, {}, m.vis_fine.growth_enabled(), tr);
    std::vector<std::size_t> idx(static_cast<std::size_t>(C));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return tr.out(3, static_cast<Eigen::Index>(a)) > tr.out(3, static_cast<Eigen::Index>(b));
    });
    for (std::size_t i = 0; i < idx.size() / 2; ++i) plan.residual_points.push_back(plan.candidate_points[idx[i]]);
  }
  plan.points_frozen = true;
}

/// Grid of cell centres covering the domain box.
scene::GridField domain_grid(const render::Domain& dom, int n, int channels) {
  return scene::GridField(n, n, n, channels, dom.box);
}

double d2v_term(ModelSet& m, const EvalContext& ctx, int frame, double weight, bool grads) {
  const auto& cfg = *ctx.config;
  const render::Domain& dom = m.domain;
  const int n = cfg.d2v_grid;
  scene::GridField density = domain_grid(dom, n, 1);
  scene::GridField curl = domain_grid(dom, n, 3);
  const auto N = static_cast<Eigen::Index>(density.cells());
  const Eigen::Index chunk = 4096;
  const std::array<double, 3> s{dom.space_scale(0), dom.space_scale(1), dom.space_scale(2)};
  const std::vector<Eigen::VectorXd> dirs{dir4(0), dir4(1), dir4(2)};

  auto inputs = [&](Eigen::Index begin, Eigen::Index count) {
    MatrixXd X(4, count);
    for (Eigen::Index j = 0; j < count; ++j) {
      const auto cell = static_cast<int>(begin + j);
      const int i = cell % n, jj = (cell / n) % n, k = cell / (n * n);
      const Vec3 c = dom.to_net(density.center(i, jj, k));
      for (int a = 0; a < 3; ++a) X(a, j) = c[static_cast<std::size_t>(a)];
      X(3, j) = dom.t_norm(frame);
    }
    return X;
  };

  fields::MlpTrace tr;
  for (Eigen::Index b = 0; b < N; b += chunk) {
    const Eigen::Index cnt = std::min(chunk, N - b);
    const MatrixXd X = inputs(b, cnt);
    fields::forward(m.vis_fine, X, {}, m.vis_fine.growth_enabled(), tr);
    for (Eigen::Index j = 0; j < cnt; ++j) density.data[static_cast<std::size_t>(b + j)] = ad::softplus(tr.out(3, j));
    fields::forward(m.hid, X, dirs, m.hid.growth_enabled(), tr);
    for (Eigen::Index j = 0; j < cnt; ++j) {
      auto d = [&](int comp, int axis) { return tr.out_dot[static_cast<std::size_t>(axis)](comp, j) * s[static_cast<std::size_t>(axis)]; };
      const auto base = static_cast<std::size_t>(b + j) * 3;
      curl.data[base + 0] = d(2, 1) - d(1, 2);
      curl.data[base + 1] = d(0, 2) - d(2, 0);
      curl.data[base + 2] = d(1, 0) - d(0, 1);
    }
  }
  physics::D2vOptions opt;
  opt.rms_normalize = cfg.d2v_rms;
  // Mean over cells so the weight does not depend on the grid size.
  const double per_cell = 1.0 / static_cast<double>(N);
  const physics::D2vResult res = physics::d2v_loss(curl, density, *ctx.oracle, frame, opt);
  if (!grads) return res.loss * per_cell;

  for (Eigen::Index b = 0; b < N; b += chunk) {
    const Eigen::Index cnt = std::min(chunk, N - b);
    fields::forward(m.hid, inputs(b, cnt), dirs, m.hid.growth_enabled(), tr);
    std::vector<MatrixXd> dadj(3, MatrixXd::Zero(3, cnt));
    for (Eigen::Index j = 0; j < cnt; ++j) {
      const auto base = static_cast<std::size_t>(b + j) * 3;
      const double g = weight * per_cell;
      const double gx = g * res.grad[base], gy = g * res.grad[base + 1], gz = g * res.grad[base + 2];
      dadj[1](2, j) += gx * s[1];
      dadj[2](1, j) -= gx * s[2];
      dadj[2](0, j) += gy * s[2];
      dadj[0](2, j) -= gy * s[0];
      dadj[0](1, j) += gz * s[0];
      dadj[1](0, j) -= gz * s[1];
    }
    fields::backward(m.hid, tr, MatrixXd::Zero(3, cnt), dadj, nullptr);
  }
  return res.loss * per_cell;
}

}  // namespace

LossBreakdown evaluate(BatchPlan& plan, ModelSet& m, const EvalContext& ctx, bool grads) {
  if (!ctx.dataset || !ctx.config) throw ArgumentError("evaluate: missing dataset or config");
  const auto& ds = *ctx.dataset;
  const auto& cfg = *ctx.config;
  const LossWeights& w = ctx.weights;
  const render::Domain& dom = m.domain;
  const bool fluid = !plan.static_only;
  const bool hybrid = m.hybrid;
  if (plan.static_only && !hybrid) throw ArgumentError("static warmup requires hybrid models");
  const bool use_patch = plan.patch.has_value() && w.vgg > 0.0;

  std::vector<const RayItem*> rays;
  for (const auto& r : plan.rays) rays.push_back(&r);
  const std::size_t n_batch = rays.size();
  if (use_patch)
    for (const auto& r : plan.patch->rays) rays.push_back(&r);
  const std::size_t n_all = (plan.patch ? plan.patch->rays.size() : 0) + plan.rays.size();
  if (plan.fine.size() != n_all) {
    plan.fine.assign(n_all, render::RaySampleSet{});
    plan.has_fine.assign(n_all, 0);
  }

  std::vector<render::RaySampleSet> coarse(rays.size());
  for (std::size_t i = 0; i < rays.size(); ++i) {
    if (!rays[i]->ray.hits) continue;
    render::Rng r(rays[i]->seed);
    coarse[i] = render::stratified(rays[i]->ray, cfg.k_coarse, &r);
  }

  ad::Tape tape;
  tape.reserve(1u << 20);
  fields::GrowingMlp* hid = fluid && cfg.warp ? &m.hid : nullptr;
  Stage sc;
  sc.run(tape, rays, coarse, fluid ? &m.vis_coarse : nullptr, hid, hybrid ? &m.static_coarse : nullptr, dom);

  const bool has_fine = cfg.k_fine > 0;
  Stage sf;
  if (has_fine) {
    for (std::size_t i = 0; i < rays.size(); ++i) {
      if (plan.has_fine[i] || !sc.valid[i]) continue;
      std::vector<double> wv;
      for (const Var& v : sc.comp[i].weights) wv.push_back(v.value());
      render::Rng r(mix_seed(rays[i]->seed, 1));
      plan.fine[i] = render::hierarchical_resample(coarse[i], wv, cfg.k_fine, r);
      plan.has_fine[i] = 1;
    }
    std::vector<render::RaySampleSet> fine(plan.fine.begin(), plan.fine.begin() + static_cast<std::ptrdiff_t>(rays.size()));
    sf.run(tape, rays, fine, fluid ? &m.vis_fine : nullptr, hid, hybrid ? &m.static_fine : nullptr, dom);
  }
  const Stage& last = has_fine ? sf : sc;
  const auto& bg = ds.background;

  LossBreakdown out;
  Var total = tape.zero();

  // Image loss over the batch rays.
  {
    Var acc = tape.zero();
    for (std::size_t i = 0; i < n_batch; ++i) {
      const Rgb<Var> cc = pixel(tape, sc, i, bg);
      for (int c = 0; c < 3; ++c) {
        const Var d = cc[static_cast<std::size_t>(c)] - rays[i]->ref[static_cast<std::size_t>(c)];
        acc = acc + d * d;
      }
      if (has_fine) {
        const Rgb<Var> cf = pixel(tape, sf, i, bg);
        for (int c = 0; c < 3; ++c) {
          const Var d = cf[static_cast<std::size_t>(c)] - rays[i]->ref[static_cast<std::size_t>(c)];
          acc = acc + d * d;
        }
      }
    }
    const Var L = acc * (1.0 / static_cast<double>(std::max<std::size_t>(n_batch, 1)));
    out.img = L.value();
    if (w.img > 0.0) total = total + L * w.img;
  }

  if (w.ghost > 0.0) {
    Var acc = tape.zero();
    for (std::size_t i = 0; i < n_batch; ++i) {
      if (!last.valid[i]) continue;
      if (last.hybrid) {
        const auto& h = last.hyb[i];
        acc = acc + ghost_loss_hybrid(render::over_background(h.composed, bg), h.composed.opacity,
                                      render::over_background(h.static_only, bg), h.static_only.opacity,
                                      render::over_background(h.fluid_only, bg), h.fluid_only.opacity, bg);
      } else {
        acc = acc + ghost_loss(render::over_background(last.comp[i], bg), bg, last.comp[i].opacity);
      }
    }
    const Var L = acc * (1.0 / static_cast<double>(std::max<std::size_t>(n_batch, 1)));
    out.ghost = L.value();
    total = total + L * w.ghost;
  }

  if (use_patch) {
    Patch<Var> rendered;
    rendered.rows = rendered.cols = plan.patch->size;
    for (std::size_t i = n_batch; i < rays.size(); ++i) {
      const Rgb<Var> c = pixel(tape, last, i, bg);
      for (const Var& v : c) rendered.rgb.push_back(v);
    }
    const GradientPyramidExtractor fallback;
    const FeatureExtractor& fx = ctx.extractor ? *ctx.extractor : fallback;
    const Var L = perceptual_loss(rendered, plan.patch->ref, fx);
    out.vgg = L.value();
    total = total + L * w.vgg;
  }

  Residuals res;
  if (fluid && (!plan.uniform_points.empty() || !plan.candidate_points.empty())) {
    if (!plan.points_frozen) freeze_points(plan, m);
    res.run(tape, plan.residual_points, m, w);
    if (res.has_transport) {
      out.transport = res.transport.value();
      total = total + res.transport * w.transport;
    }
    if (res.has_nse) {
      out.nse = res.nse.value();
      total = total + res.nse * w.nse;
    }
    if (res.has_overlay) {
      out.overlay = res.overlay.value();
      total = total + res.overlay * w.overlay;
    }
  }
  out.total = total.value();

  if (grads) {
    tape.backward(total);
    sc.backward(tape, dom);
    if (has_fine) sf.backward(tape, dom);
    res.backward(tape);
  }

  if (fluid && plan.d2v && ctx.oracle && w.d2v > 0.0) {
    out.d2v = d2v_term(m, ctx, plan.d2v_frame, w.d2v, grads);
    out.total += w.d2v * out.d2v;
  }
  return out;
}

}  // namespace pinf::train
