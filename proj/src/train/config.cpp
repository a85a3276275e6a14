#include "pinf/train/config.hpp"

#include <cmath>

#include "json.hpp"
#include "pinf/common.hpp"

namespace pinf::train {

void LossWeights::validate() const {
  for (double w : {img, vgg, ghost, transport, nse, div, d2v, overlay})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("loss weights must be finite and nonnegative");
}

int TrainConfig::warmup_iters() const {
  if (!hybrid) return 0;
  return static_warmup >= 0 ? static_warmup : total_iters / 10;
}

int TrainConfig::decay_interval() const { return lr_interval > 0 ? lr_interval : std::max(1, total_iters / 4); }

double TrainConfig::lr_at(int iter) const { return lr * std::pow(lr_decay, iter / decay_interval()); }

void TrainConfig::validate() const {
  if (total_iters < 0) throw ArgumentError("total_iters must be >= 0");
  if (grow_steps <= 0) throw ArgumentError("grow_steps must be positive");
  if (grow_steps > std::max(total_iters, 1)) throw ArgumentError("grow_steps must not exceed total_iters");
  if (rays_per_batch <= 0) throw ArgumentError("rays_per_batch must be positive");
  if (k_coarse < 2 || k_fine < 0) throw ArgumentError("need k_coarse >= 2 and k_fine >= 0");
  if (patch_size < 2 || patch_stride_min < 1 || patch_stride_max < patch_stride_min)
    throw ArgumentError("bad patch size or stride range");
  if (residual_points < 0 || importance_fraction < 0.0 || importance_fraction > 1.0)
    throw ArgumentError("bad residual point settings");
  if (d2v_every <= 0 || d2v_grid < 3) throw ArgumentError("d2v needs a cadence > 0 and a grid of >= 3 cells");
  if (!(lr > 0.0) || !(lr_decay > 0.0)) throw ArgumentError("learning rate settings must be positive");
  if (foreground_fraction < 0.0 || foreground_fraction > 1.0) throw ArgumentError("foreground_fraction in [0, 1]");
  if (!(dt_std >= 0.0)) throw ArgumentError("dt_std must be >= 0");
  if (static_warmup > total_iters) throw ArgumentError("static_warmup exceeds total_iters");
}

namespace {

template <class T>
void get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void config_from_json(const std::string& text, TrainConfig& c, LossWeights& w) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      get(t, "total_iters", c.total_iters);
      get(t, "grow_steps", c.grow_steps);
      get(t, "grow_vis", c.grow_vis);
      get(t, "grow_hid", c.grow_hid);
      get(t, "static_warmup", c.static_warmup);
      get(t, "hybrid", c.hybrid);
      get(t, "rays_per_batch", c.rays_per_batch);
      get(t, "foreground_fraction", c.foreground_fraction);
      get(t, "k_coarse", c.k_coarse);
      get(t, "k_fine", c.k_fine);
      get(t, "warp", c.warp);
      get(t, "dt_std", c.dt_std);
      get(t, "patch_size", c.patch_size);
      get(t, "patch_stride_min", c.patch_stride_min);
      get(t, "patch_stride_max", c.patch_stride_max);
      get(t, "patch_every", c.patch_every);
      get(t, "residual_points", c.residual_points);
      get(t, "importance_fraction", c.importance_fraction);
      get(t, "init_density_bias", c.init_density_bias);
      get(t, "d2v_every", c.d2v_every);
      get(t, "d2v_grid", c.d2v_grid);
      get(t, "d2v_rms", c.d2v_rms);
      get(t, "lr", c.lr);
      get(t, "lr_decay", c.lr_decay);
      get(t, "lr_interval", c.lr_interval);
      get(t, "checkpoint_every", c.checkpoint_every);
      get(t, "log_every", c.log_every);
      get(t, "seed", c.seed);
      if (t.contains("sizes")) {
        const auto& s = t.at("sizes");
        get(s, "vis_hidden", c.sizes.vis_hidden);
        get(s, "vis_layers", c.sizes.vis_layers);
        get(s, "hid_hidden", c.sizes.hid_hidden);
        get(s, "hid_layers", c.sizes.hid_layers);
        get(s, "static_hidden", c.sizes.static_hidden);
        get(s, "static_layers", c.sizes.static_layers);
      }
    }
    if (j.contains("weights")) {
      const auto& x = j.at("weights");
      get(x, "img", w.img);
      get(x, "vgg", w.vgg);
      get(x, "ghost", w.ghost);
      get(x, "transport", w.transport);
      get(x, "nse", w.nse);
      get(x, "div", w.div);
      get(x, "d2v", w.d2v);
      get(x, "overlay", w.overlay);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config json: ") + e.what());
  }
  c.validate();
  w.validate();
}

std::string config_to_json(const TrainConfig& c, const LossWeights& w) {
  nlohmann::json t = {{"total_iters", c.total_iters},
                      {"grow_steps", c.grow_steps},
                      {"grow_vis", c.grow_vis},
                      {"grow_hid", c.grow_hid},
                      {"static_warmup", c.static_warmup},
                      {"hybrid", c.hybrid},
                      {"rays_per_batch", c.rays_per_batch},
                      {"foreground_fraction", c.foreground_fraction},
                      {"k_coarse", c.k_coarse},
                      {"k_fine", c.k_fine},
                      {"warp", c.warp},
                      {"dt_std", c.dt_std},
                      {"patch_size", c.patch_size},
                      {"patch_stride_min", c.patch_stride_min},
                      {"patch_stride_max", c.patch_stride_max},
                      {"patch_every", c.patch_every},
                      {"residual_points", c.residual_points},
                      {"importance_fraction", c.importance_fraction},
                      {"init_density_bias", c.init_density_bias},
                      {"d2v_every", c.d2v_every},
                      {"d2v_grid", c.d2v_grid},
                      {"d2v_rms", c.d2v_rms},
                      {"lr", c.lr},
                      {"lr_decay", c.lr_decay},
                      {"lr_interval", c.lr_interval},
                      {"checkpoint_every", c.checkpoint_every},
                      {"log_every", c.log_every},
                      {"seed", c.seed}};
  t["sizes"] = {{"vis_hidden", c.sizes.vis_hidden},       {"vis_layers", c.sizes.vis_layers},
                {"hid_hidden", c.sizes.hid_hidden},       {"hid_layers", c.sizes.hid_layers},
                {"static_hidden", c.sizes.static_hidden}, {"static_layers", c.sizes.static_layers}};
  nlohmann::json ws = {{"img", w.img},         {"vgg", w.vgg}, {"ghost", w.ghost}, {"transport", w.transport},
                       {"nse", w.nse},         {"div", w.div}, {"d2v", w.d2v},     {"overlay", w.overlay}};
  return nlohmann::json{{"train", t}, {"weights", ws}}.dump(2);
}

}  // namespace pinf::train
