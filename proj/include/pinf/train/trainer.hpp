#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pinf/train/adam.hpp"
#include "pinf/train/evaluator.hpp"

namespace pinf::train {

struct TrainReport {
  int iterations = 0;
  long skipped_updates = 0;
  std::vector<LossBreakdown> history;
  std::string checkpoint;  // final checkpoint path, empty without out_dir
};

/// Growth state for iteration s: routing across layers while s < S, then
/// the last layer alone.
void apply_growth(ModelSet& m, const TrainConfig& cfg, int iter);

/// Runs the optimisation. Writes metrics.csv and checkpoints to out_dir when
/// it is non-empty. Throws ArgumentError on a dataset/camera mismatch and
/// NumericError on a non-finite loss (the last good checkpoint is kept).
/// `progress` is called after each iteration when set.
TrainReport train(const scene::SceneDataset& ds, ModelSet& models, const TrainConfig& cfg, const LossWeights& w,
                  const physics::VelocityPriorOracle* oracle, const std::string& out_dir,
                  const std::function<void(int, const LossBreakdown&)>& progress = {});

}  // namespace pinf::train
