#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "pinf/ad/tape.hpp"

namespace pinf::render {

template <class S>
using Rgb = std::array<S, 3>;

/// Emission-absorption quadrature result. `trans[k]` is the transmittance in
/// front of sample k and `weights[k] = trans[k] * alpha_k`.
template <class S>
struct Composite {
  Rgb<S> color{};
  S opacity{};
  std::vector<S> trans;
  std::vector<S> weights;
};

namespace detail {
inline double zero_like(double) { return 0.0; }
inline ad::Var zero_like(ad::Var v) { return v.tape->zero(); }
inline double one_like(double) { return 1.0; }
inline ad::Var one_like(ad::Var v) { return v.tape->one(); }
/// (1 - exp(-s d)) / s, continuous at s = 0.
template <class S>
S alpha_over_sigma(S s, double d) {
  using std::exp;
  if (ad::value_of(s) * d < 1e-8) return (s * (-0.5 * d * d)) + d;
  return (1.0 - exp(s * (-d))) / s;
}
}  // namespace detail

/// Standard quadrature: T_k = exp(-sum_{j<k} sigma_j delta_j),
/// alpha_k = 1 - exp(-sigma_k delta_k), C = sum T alpha c, A = sum T alpha.
/// Works for S = double and S = ad::Var.
template <class S>
Composite<S> quadrature(std::span<const double> delta, std::span<const S> sigma, std::span<const Rgb<S>> color) {
  using std::exp;
  const std::size_t K = delta.size();
  Composite<S> out;
  if (K == 0) return out;
  const S zero = detail::zero_like(sigma[0]);
  out.color = {zero, zero, zero};
  out.trans.reserve(K);
  out.weights.reserve(K);
  S optical = zero;
  for (std::size_t k = 0; k < K; ++k) {
    const S T = k == 0 ? detail::one_like(sigma[0]) : exp(optical * -1.0);
    const S alpha = 1.0 - exp(sigma[k] * (-delta[k]));
    const S w = T * alpha;
    out.trans.push_back(T);
    out.weights.push_back(w);
    for (int c = 0; c < 3; ++c) out.color[c] = out.color[c] + w * color[k][c];
    optical = optical + sigma[k] * delta[k];
  }
  // Equal to sum_k w_k; the closed form avoids accumulated rounding.
  out.opacity = 1.0 - exp(optical * -1.0);
  return out;
}

template <class S>
struct HybridComposite {
  Composite<S> composed;  // joint transmittance of sigma_static + sigma_fluid
  Composite<S> static_only;
  Composite<S> fluid_only;
};

/// Joint compositing of a static and a fluid model sampled at the same
/// positions. The joint alpha 1 - exp(-(s_s + s_f) delta) is split between the
/// models in proportion to their densities, so A_compos stays in [0, 1] and is
/// exact for piecewise-constant densities.
template <class S>
HybridComposite<S> composite_hybrid(std::span<const double> delta, std::span<const S> sigma_static,
                                    std::span<const Rgb<S>> color_static, std::span<const S> sigma_fluid,
                                    std::span<const Rgb<S>> color_fluid) {
  using std::exp;
  const std::size_t K = delta.size();
  HybridComposite<S> out;
  out.static_only = quadrature<S>(delta, sigma_static, color_static);
  out.fluid_only = quadrature<S>(delta, sigma_fluid, color_fluid);
  if (K == 0) return out;
  auto& c = out.composed;
  const S zero = detail::zero_like(sigma_static[0]);
  c.color = {zero, zero, zero};
  S optical = zero;
  for (std::size_t k = 0; k < K; ++k) {
    const S T = k == 0 ? detail::one_like(sigma_static[0]) : exp(optical * -1.0);
    const S tot = sigma_static[k] + sigma_fluid[k];
    const S g = detail::alpha_over_sigma(tot, delta[k]);
    const S as = sigma_static[k] * g;
    const S af = sigma_fluid[k] * g;
    const S w = T * (as + af);
    c.trans.push_back(T);
    c.weights.push_back(w);
    for (int ch = 0; ch < 3; ++ch) c.color[ch] = c.color[ch] + T * (as * color_static[k][ch] + af * color_fluid[k][ch]);
    optical = optical + tot * delta[k];
  }
  c.opacity = 1.0 - exp(optical * -1.0);
  return out;
}

/// Final pixel over a solid background: C + (1 - A) B.
template <class S>
Rgb<S> over_background(const Composite<S>& c, const std::array<double, 3>& bg) {
  Rgb<S> out;
  for (int ch = 0; ch < 3; ++ch) out[ch] = c.color[ch] + (1.0 - c.opacity) * bg[ch];
  return out;
}

}  // namespace pinf::render
