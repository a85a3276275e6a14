#pragma once

#include <array>
#include <vector>

#include "pinf/ad/dual.hpp"
#include "pinf/common.hpp"

namespace pinf::physics {

/// Value and first derivatives of a scalar field: d = (d/dx, d/dy, d/dz,
/// d/dframe) in scene units.
template <class S>
struct Jet {
  S v{};
  std::array<S, 4> d{};
};

template <class S>
using VecJet = std::array<Jet<S>, 3>;

/// (d sigma/dt + u . grad sigma)^2
template <class S>
S transport_term(const Jet<S>& sigma, const VecJet<S>& u) {
  const S m = sigma.d[3] + u[0].v * sigma.d[0] + u[1].v * sigma.d[1] + u[2].v * sigma.d[2];
  return m * m;
}

/// || du/dt + (u . grad) u ||^2
template <class S>
S momentum_term(const VecJet<S>& u) {
  S acc = u[0].v * 0.0;
  for (int c = 0; c < 3; ++c) {
    const S m = u[c].d[3] + u[0].v * u[c].d[0] + u[1].v * u[c].d[1] + u[2].v * u[c].d[2];
    acc = acc + m * m;
  }
  return acc;
}

template <class S>
S divergence_of(const VecJet<S>& u) {
  return u[0].d[0] + u[1].d[1] + u[2].d[2];
}

template <class S>
std::array<S, 3> curl_of(const VecJet<S>& u) {
  return {u[2].d[1] - u[1].d[2], u[0].d[2] - u[2].d[0], u[1].d[0] - u[0].d[1]};
}

/// momentum + w_div * divergence^2
template <class S>
S nse_term(const VecJet<S>& u, double w_div) {
  const S div = divergence_of(u);
  return momentum_term(u) + div * div * w_div;
}

/// sigma_s sigma_f / (sigma_s^2 + sigma_f^2 + eps), in [0, 0.5].
template <class S>
S overlay_term(const S& s, const S& f, double eps = 1e-8) {
  return s * f / (s * s + f * f + eps);
}

// ---------------------------------------------------------------------------
// Autodiff route over arbitrary fields. A field is a DualFunction taking the
// scene point and frame (x, y, z, frame) and returning its outputs.

/// Jets of every output of f at (x, frame); one tangent sweep per axis.
std::vector<Jet<ad::Var>> field_jets(ad::Tape& tape, const ad::DualFunction& f, const Vec3& x, double frame);

/// Squared material derivative of sigma (output `sigma_index` of vis) under
/// the velocity field. The density jet is detached, so only the velocity
/// field's parameters receive gradients.
ad::Var transport_residual(ad::Tape& tape, const ad::DualFunction& vis, int sigma_index,
                           const ad::DualFunction& hid, const Vec3& x, double frame);

struct NseParts {
  ad::Var momentum;
  ad::Var divergence_sq;
  ad::Var total;  // momentum + w_div * divergence_sq
};
NseParts nse_residual(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame, double w_div);

Vec3 curl(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame);
double divergence(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame);

}  // namespace pinf::physics
