#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "pinf/ad/tape.hpp"
#include "pinf/render/quadrature.hpp"

namespace pinf::train {

using render::Rgb;

/// mean over pixels of ||C_ref - C_coarse||^2 + ||C_ref - C_fine||^2
template <class S>
S image_loss(const std::vector<Rgb<S>>& coarse, const std::vector<Rgb<S>>& fine,
             const std::vector<std::array<double, 3>>& ref) {
  S acc = coarse.at(0)[0] * 0.0;
  for (std::size_t p = 0; p < ref.size(); ++p)
    for (int c = 0; c < 3; ++c) {
      const S dc = coarse[p][c] - ref[p][c];
      const S df = fine[p][c] - ref[p][c];
      acc = acc + dc * dc + df * df;
    }
  return acc * (1.0 / static_cast<double>(ref.size()));
}

/// logistic(-mean_c (C - B)^2) * A
template <class S, class B>
S ghost_loss(const Rgb<S>& C, const std::array<B, 3>& bg, const S& A) {
  using ad::logistic;
  S d = (C[0] - bg[0]) * (C[0] - bg[0]);
  for (int c = 1; c < 3; ++c) d = d + (C[c] - bg[c]) * (C[c] - bg[c]);
  return logistic(d * (-1.0 / 3.0)) * A;
}

/// Sum of three ghost terms: composite vs background, static vs background and
/// fluid vs the static render.
template <class S>
S ghost_loss_hybrid(const Rgb<S>& C_compos, const S& A_compos, const Rgb<S>& C_static, const S& A_static,
                    const Rgb<S>& C_fluid, const S& A_fluid, const std::array<double, 3>& bg) {
  using ad::logistic;
  S d = (C_fluid[0] - C_static[0]) * (C_fluid[0] - C_static[0]);
  for (int c = 1; c < 3; ++c) d = d + (C_fluid[c] - C_static[c]) * (C_fluid[c] - C_static[c]);
  const S third = logistic(d * (-1.0 / 3.0)) * A_fluid;
  return ghost_loss(C_compos, bg, A_compos) + ghost_loss(C_static, bg, A_static) + third;
}

// ---------------------------------------------------------------------------
// Perceptual loss with a pluggable feature extractor.

/// A patch as rows x cols RGB values (row-major), scalar type S.
template <class S>
struct Patch {
  int rows = 0;
  int cols = 0;
  std::vector<S> rgb;
  const S& at(int r, int c, int ch) const { return rgb[(static_cast<std::size_t>(r) * cols + c) * 3 + ch]; }
};

/// Feature maps per layer, flattened.
template <class S>
using Features = std::vector<std::vector<S>>;

/// Built-in extractor: a 3-level 2x average-pooling pyramid; each level
/// contributes its horizontal and vertical finite-difference maps.
template <class S>
Features<S> gradient_pyramid(const Patch<S>& p, int levels = 3) {
  Features<S> out;
  Patch<S> cur = p;
  for (int l = 0; l < levels; ++l) {
    std::vector<S> f;
    for (int r = 0; r < cur.rows; ++r)
      for (int c = 0; c + 1 < cur.cols; ++c)
        for (int ch = 0; ch < 3; ++ch) f.push_back(cur.at(r, c + 1, ch) - cur.at(r, c, ch));
    for (int r = 0; r + 1 < cur.rows; ++r)
      for (int c = 0; c < cur.cols; ++c)
        for (int ch = 0; ch < 3; ++ch) f.push_back(cur.at(r + 1, c, ch) - cur.at(r, c, ch));
    out.push_back(std::move(f));
    if (l + 1 == levels) break;
    Patch<S> next;
    next.rows = cur.rows / 2;
    next.cols = cur.cols / 2;
    for (int r = 0; r < next.rows; ++r)
      for (int c = 0; c < next.cols; ++c)
        for (int ch = 0; ch < 3; ++ch)
          next.rgb.push_back((cur.at(2 * r, 2 * c, ch) + cur.at(2 * r + 1, 2 * c, ch) + cur.at(2 * r, 2 * c + 1, ch) +
                              cur.at(2 * r + 1, 2 * c + 1, ch)) *
                             0.25);
    cur = std::move(next);
  }
  return out;
}

/// Extractor interface so a learned network can replace the built-in pyramid.
/// Implementations must provide both scalar types.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Features<double> extract(const Patch<double>& p) const = 0;
  virtual Features<ad::Var> extract(const Patch<ad::Var>& p) const = 0;
};

class GradientPyramidExtractor : public FeatureExtractor {
 public:
  explicit GradientPyramidExtractor(int levels = 3) : levels_(levels) {}
  Features<double> extract(const Patch<double>& p) const override { return gradient_pyramid(p, levels_); }
  Features<ad::Var> extract(const Patch<ad::Var>& p) const override { return gradient_pyramid(p, levels_); }

 private:
  int levels_;
};

/// sum over layers of (1 - cos(f_rendered, f_reference)); a layer whose
/// feature vector has zero norm on either side contributes 1.
template <class S>
S perceptual_loss(const Patch<S>& rendered, const Patch<double>& reference, const FeatureExtractor& fx) {
  using std::sqrt;
  using ad::sqrt;
  const Features<S> a = fx.extract(rendered);
  const Features<double> b = fx.extract(reference);
  if (a.size() != b.size()) throw ContractError("perceptual_loss: feature layer counts differ");
  S acc = rendered.rgb.at(0) * 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].size() != b[l].size()) throw ContractError("perceptual_loss: feature sizes differ");
    S dotp = acc * 0.0, na = acc * 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a[l].size(); ++i) {
      dotp = dotp + a[l][i] * b[l][i];
      na = na + a[l][i] * a[l][i];
      nb += b[l][i] * b[l][i];
    }
    if (ad::value_of(na) == 0.0 || nb == 0.0) {
      acc = acc + 1.0;
      continue;
    }
    acc = acc + (1.0 - dotp / (sqrt(na) * std::sqrt(nb)));
  }
  return acc;
}

}  // namespace pinf::train
