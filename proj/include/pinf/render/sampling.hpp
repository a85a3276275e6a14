#pragma once

#include <random>
#include <span>
#include <vector>

#include "pinf/render/camera.hpp"

namespace pinf::render {

using Rng = std::mt19937_64;

/// Sample positions along one ray. delta[k] = h[k+1] - h[k]; the last step
/// runs to `far`.
struct RaySampleSet {
  Vec3 origin{};
  Vec3 dir{};
  double near = 0.0;
  double far = 0.0;
  std::vector<double> h;
  std::vector<double> delta;

  std::size_t size() const { return h.size(); }
  Vec3 point(std::size_t k) const { return origin + dir * h[k]; }
  /// Throws ContractError unless h is strictly increasing inside [near, far]
  /// and every delta is positive.
  void validate() const;
};

/// Recomputes delta from h and far.
void recompute_deltas(RaySampleSet& s);

/// K bins of equal length over [near, far]; one uniform draw per bin when
/// `jitter` is set, otherwise the bin starts.
RaySampleSet stratified(const Ray& ray, int K, Rng* rng);

/// Inverse-CDF sampling of K_f extra positions from the piecewise-constant
/// density given by `weights` over the coarse intervals [h_k, h_k + delta_k).
/// Normalised weights get a floor of `floor` per bin before renormalising.
/// All-zero weights fall back to K_f stratified samples. The result holds the
/// coarse and fine samples merged in ascending order.
RaySampleSet hierarchical_resample(const RaySampleSet& coarse, std::span<const double> weights, int K_f, Rng& rng,
                                   double floor = 1e-3);

/// Merges two sample sets of the same ray, dropping exact duplicates.
RaySampleSet merge_samples(const RaySampleSet& a, const RaySampleSet& b);

}  // namespace pinf::render
