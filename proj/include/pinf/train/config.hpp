#pragma once

#include <cstdint>
#include <string>

namespace pinf::train {

struct LossWeights {
  double img = 1.0;
  double vgg = 0.01;
  double ghost = 1.0;
  double transport = 1.0;
  double nse = 1.0;
  double div = 1.0;  // inside L_NSE
  double d2v = 0.1;
  double overlay = 0.1;

  /// Throws ArgumentError on a negative or non-finite weight.
  void validate() const;
};

struct ModelSizes {
  int vis_hidden = 32, vis_layers = 4;
  int hid_hidden = 32, hid_layers = 4;
  int static_hidden = 32, static_layers = 3;
};

struct TrainConfig {
  int total_iters = 4000;
  int grow_steps = 2000;  // S
  bool grow_vis = true;
  bool grow_hid = false;
  /// -1 selects 10% of total_iters.
  int static_warmup = -1;
  bool hybrid = false;

  int rays_per_batch = 128;
  /// Fraction of rays drawn from pixels that differ from the background.
  double foreground_fraction = 0.5;
  int k_coarse = 16;
  int k_fine = 16;
  bool warp = true;
  double dt_std = 0.5;

  int patch_size = 40;
  int patch_stride_min = 1;
  int patch_stride_max = 1;
  int patch_every = 25;

  int residual_points = 256;
  double importance_fraction = 0.5;

  /// Initial bias of the radiance density outputs; negative starts the
  /// volume nearly empty.
  double init_density_bias = -3.0;

  int d2v_every = 20;
  int d2v_grid = 32;
  /// RMS curl normalisation; the literal mean-square form blows up as the
  /// predicted curl shrinks.
  bool d2v_rms = true;

  double lr = 5e-4;
  double lr_decay = 0.5;
  /// Iterations per decay step; 0 selects a quarter of total_iters.
  int lr_interval = 0;

  int checkpoint_every = 0;  // 0: only the final checkpoint
  int log_every = 1;
  std::uint64_t seed = 0;
  ModelSizes sizes;

  int warmup_iters() const;
  int decay_interval() const;
  double lr_at(int iter) const;
  /// Throws ArgumentError when grow_steps > total_iters or a count is invalid.
  /// Image-dependent checks (patch fits) happen in train().
  void validate() const;
};

/// Both structures from one JSON object; missing keys keep their defaults.
/// Recognised layout: {"train": {...}, "weights": {...}}.
void config_from_json(const std::string& text, TrainConfig& cfg, LossWeights& w);
std::string config_to_json(const TrainConfig& cfg, const LossWeights& w);

}  // namespace pinf::train
