#pragma once

#include <string>

#include "pinf/fields/mlp.hpp"
#include "pinf/render/domain.hpp"
#include "pinf/train/config.hpp"

namespace pinf::train {

/// All networks of a reconstruction. Static models are only used in hybrid mode.
struct ModelSet {
  fields::GrowingMlp vis_coarse;
  fields::GrowingMlp vis_fine;
  fields::GrowingMlp hid;
  fields::GrowingMlp static_coarse;
  fields::GrowingMlp static_fine;
  bool hybrid = false;
  render::Domain domain;
  int iteration = 0;

  /// True once the growth schedule has started routing across layers.
  bool vis_grown() const { return vis_fine.growth_enabled(); }
  bool hid_grown() const { return hid.growth_enabled(); }
};

ModelSet make_models(const TrainConfig& cfg, const render::Domain& dom, std::uint64_t seed);

/// PINF-CKPT1: magic, JSON header (domain, iteration, model shapes and growth
/// state), then each model's parameters as f64.
void save_checkpoint(const std::string& path, const ModelSet& m);
ModelSet load_checkpoint(const std::string& path);

}  // namespace pinf::train
