#include "pinf/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pinf/fields/growth.hpp"

namespace pinf::train {

namespace fs = std::filesystem;

void apply_growth(ModelSet& m, const TrainConfig& cfg, int iter) {
  const double S = cfg.grow_steps;
  const double s = iter;
  m.vis_coarse.set_growth(s, S, cfg.grow_vis);
  m.vis_fine.set_growth(s, S, cfg.grow_vis);
  m.static_coarse.set_growth(s, S, cfg.grow_vis);
  m.static_fine.set_growth(s, S, cfg.grow_vis);
  m.hid.set_growth(s, S, cfg.grow_hid);
}

namespace {

void check_dataset(const scene::SceneDataset& ds, const ModelSet& m, const TrainConfig& cfg) {
  ds.validate();
  if (ds.frames() != m.domain.frames) throw ArgumentError("dataset frame count does not match the models");
  for (std::size_t a = 0; a < 3; ++a)
    if (ds.box.lo[a] != m.domain.box.lo[a] || ds.box.hi[a] != m.domain.box.hi[a])
      throw ArgumentError("dataset domain box does not match the models");
  if (cfg.hybrid != m.hybrid) throw ArgumentError("hybrid setting differs between config and models");
  if (cfg.hybrid && !ds.has_static) std::fprintf(stderr, "warning: hybrid training on a dataset without an obstacle\n");
  const int span = (cfg.patch_size - 1) * cfg.patch_stride_max + 1;
  for (int c : ds.train_cameras()) {
    const auto& cam = ds.cameras[static_cast<std::size_t>(c)];
    const auto& img = ds.images[static_cast<std::size_t>(c)].at(0);
    if (img.width != cam.width || img.height != cam.height)
      throw ArgumentError("camera " + std::to_string(c) + " resolution does not match its images");
    if (cfg.patch_every > 0 && (span > cam.width || span > cam.height))
      throw ArgumentError("patch does not fit in camera " + std::to_string(c));
  }
}

void zero_all(ModelSet& m) {
  m.vis_coarse.params().zero_grad();
  m.vis_fine.params().zero_grad();
  m.hid.params().zero_grad();
  m.static_coarse.params().zero_grad();
  m.static_fine.params().zero_grad();
}

}  // namespace

TrainReport train(const scene::SceneDataset& ds, ModelSet& m, const TrainConfig& cfg, const LossWeights& w,
                  const physics::VelocityPriorOracle* oracle, const std::string& out_dir,
                  const std::function<void(int, const LossBreakdown&)>& progress) {
  cfg.validate();
  w.validate();
  check_dataset(ds, m, cfg);

  std::ofstream csv;
  std::string ckpt;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "config.json") << config_to_json(cfg, w) << "\n";
    csv.open(fs::path(out_dir) / "metrics.csv");
    if (!csv) throw IoError("cannot write metrics.csv in " + out_dir);
    csv << "iter,L_img,L_VGG,L_ghost,L_transport,L_NSE,L_d2v,L_overlay,lr,m_a\n";
    ckpt = (fs::path(out_dir) / "checkpoint.pinf").string();
  }

  EvalContext ctx;
  ctx.dataset = &ds;
  ctx.config = &cfg;
  ctx.weights = w;
  ctx.oracle = oracle;

  OptimizerState o_vc(m.vis_coarse.params().size()), o_vf(m.vis_fine.params().size()), o_h(m.hid.params().size()),
      o_sc(m.static_coarse.params().size()), o_sf(m.static_fine.params().size());
  const RayPool pool = build_ray_pool(ds);
  TrainReport rep;

  for (int it = 0; it < cfg.total_iters; ++it) {
    apply_growth(m, cfg, it);
    BatchPlan plan = make_plan(ds, cfg, pool, it, cfg.seed);
    zero_all(m);
    const LossBreakdown L = evaluate(plan, m, ctx, true);
    if (!std::isfinite(L.total))
      throw NumericError("non-finite loss at iteration " + std::to_string(it) +
                         (ckpt.empty() ? std::string() : "; last good checkpoint kept at " + ckpt));
    const double lr = cfg.lr_at(it);
    auto step = [&](fields::GrowingMlp& g, OptimizerState& o) { adam_step(g.params().values(), g.params().grad(), o, lr); };
    if (!plan.static_only) {
      step(m.vis_coarse, o_vc);
      step(m.vis_fine, o_vf);
      step(m.hid, o_h);
    }
    if (m.hybrid) {
      step(m.static_coarse, o_sc);
      step(m.static_fine, o_sf);
    }
    m.iteration = it + 1;
    rep.history.push_back(L);
    if (csv.is_open() && (it % std::max(1, cfg.log_every) == 0 || it + 1 == cfg.total_iters)) {
      const double ma = cfg.grow_vis ? fields::growth_anchor(it, cfg.grow_steps, cfg.sizes.vis_layers)
                                     : static_cast<double>(cfg.sizes.vis_layers - 1);
      char line[512];
      std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6g\n", it, L.img, L.vgg, L.ghost,
                    L.transport, L.nse, L.d2v, L.overlay, lr, ma);
      csv << line;
      csv.flush();
    }
    if (!ckpt.empty() && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) save_checkpoint(ckpt, m);
    if (progress) progress(it, L);
  }
  if (cfg.total_iters > 0) apply_growth(m, cfg, cfg.total_iters);
  rep.iterations = cfg.total_iters;
  rep.skipped_updates = o_vc.skipped + o_vf.skipped + o_h.skipped + o_sc.skipped + o_sf.skipped;
  if (!ckpt.empty()) {
    save_checkpoint(ckpt, m);
    rep.checkpoint = ckpt;
  }
  return rep;
}

}  // namespace pinf::train
