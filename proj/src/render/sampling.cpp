#include "pinf/render/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace pinf::render {

void RaySampleSet::validate() const {
  if (h.size() != delta.size()) throw ContractError("sample set: h and delta differ in length");
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k] < near || h[k] > far) throw ContractError("sample set: position outside [near, far]");
    if (k > 0 && !(h[k] > h[k - 1])) throw ContractError("sample set: positions not strictly increasing");
    if (!(delta[k] > 0.0)) throw ContractError("sample set: non-positive step");
  }
}

void recompute_deltas(RaySampleSet& s) {
  s.delta.resize(s.h.size());
  for (std::size_t k = 0; k + 1 < s.h.size(); ++k) s.delta[k] = s.h[k + 1] - s.h[k];
  if (!s.h.empty()) s.delta.back() = s.far - s.h.back();
}

static RaySampleSet empty_like(const Ray& ray) {
  RaySampleSet s;
  s.origin = ray.origin;
  s.dir = ray.dir;
  s.near = ray.near;
  s.far = ray.far;
  return s;
}

RaySampleSet stratified(const Ray& ray, int K, Rng* rng) {
  if (K <= 0) throw ArgumentError("stratified: K must be positive");
  RaySampleSet s = empty_like(ray);
  const double len = (ray.far - ray.near) / K;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.h.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    // Keep jittered positions off the upper bin edge so h stays strictly increasing.
    const double j = rng ? std::min(u(*rng), 1.0 - 1e-9) : 0.0;
    s.h[static_cast<std::size_t>(k)] = ray.near + (k + j) * len;
  }
  recompute_deltas(s);
  return s;
}

RaySampleSet merge_samples(const RaySampleSet& a, const RaySampleSet& b) {
  RaySampleSet s = a;
  s.h.clear();
  std::merge(a.h.begin(), a.h.end(), b.h.begin(), b.h.end(), std::back_inserter(s.h));
  s.h.erase(std::unique(s.h.begin(), s.h.end()), s.h.end());
  recompute_deltas(s);
  return s;
}

RaySampleSet hierarchical_resample(const RaySampleSet& coarse, std::span<const double> weights, int K_f, Rng& rng,
                                   double floor) {
  const std::size_t K = coarse.size();
  if (weights.size() != K) throw ArgumentError("hierarchical_resample: weight count differs from sample count");
  if (K_f <= 0) return coarse;
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ArgumentError("hierarchical_resample: negative or non-finite weight");
    total += w;
  }
  Ray ray{coarse.origin, coarse.dir, coarse.near, coarse.far, true};
  if (total <= 0.0) return merge_samples(coarse, stratified(ray, K_f, &rng));

  std::vector<double> pdf(K);
  for (std::size_t k = 0; k < K; ++k) pdf[k] = weights[k] / total + floor;
  std::vector<double> cdf(K + 1, 0.0);
  std::partial_sum(pdf.begin(), pdf.end(), cdf.begin() + 1);
  for (double& c : cdf) c /= cdf.back();

  RaySampleSet fine = coarse;
  fine.h.clear();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < K_f; ++i) {
    const double u = (i + u01(rng)) / K_f;
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    std::size_t bin = static_cast<std::size_t>(std::distance(cdf.begin() + 1, it));
    bin = std::min(bin, K - 1);
    const double span = cdf[bin + 1] - cdf[bin];
    const double f = span > 0.0 ? (u - cdf[bin]) / span : 0.0;
    fine.h.push_back(coarse.h[bin] + std::clamp(f, 0.0, 1.0 - 1e-9) * coarse.delta[bin]);
  }
  std::sort(fine.h.begin(), fine.h.end());
  return merge_samples(coarse, fine);
}

}  // namespace pinf::render
