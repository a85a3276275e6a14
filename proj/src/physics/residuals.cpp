#include "pinf/physics/residuals.hpp"

namespace pinf::physics {

std::vector<Jet<ad::Var>> field_jets(ad::Tape& tape, const ad::DualFunction& f, const Vec3& x, double frame) {
  const std::array<double, 4> at{x[0], x[1], x[2], frame};
  std::vector<Jet<ad::Var>> jets;
  for (int d = 0; d < 4; ++d) {
    std::array<double, 4> dir{0, 0, 0, 0};
    dir[static_cast<std::size_t>(d)] = 1.0;
    const auto out = ad::input_derivative(tape, f, at, dir);
    if (jets.empty()) jets.resize(out.size());
    for (std::size_t o = 0; o < out.size(); ++o) {
      if (d == 0) jets[o].v = out[o].v;
      jets[o].d[static_cast<std::size_t>(d)] = out[o].d;
    }
  }
  return jets;
}

static VecJet<ad::Var> velocity_jet(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame) {
  const auto j = field_jets(tape, hid, x, frame);
  if (j.size() != 3) throw ArgumentError("velocity field must have 3 outputs");
  return {j[0], j[1], j[2]};
}

ad::Var transport_residual(ad::Tape& tape, const ad::DualFunction& vis, int sigma_index,
                           const ad::DualFunction& hid, const Vec3& x, double frame) {
  const auto vj = field_jets(tape, vis, x, frame);
  if (sigma_index < 0 || static_cast<std::size_t>(sigma_index) >= vj.size())
    throw ArgumentError("transport_residual: sigma index out of range");
  Jet<ad::Var> s = vj[static_cast<std::size_t>(sigma_index)];
  s.v = tape.detach(s.v);
  for (auto& d : s.d) d = tape.detach(d);
  return transport_term(s, velocity_jet(tape, hid, x, frame));
}

NseParts nse_residual(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame, double w_div) {
  const auto u = velocity_jet(tape, hid, x, frame);
  NseParts p;
  p.momentum = momentum_term(u);
  const ad::Var div = divergence_of(u);
  p.divergence_sq = div * div;
  p.total = p.momentum + p.divergence_sq * w_div;
  return p;
}

Vec3 curl(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame) {
  const auto c = curl_of(velocity_jet(tape, hid, x, frame));
  return {c[0].value(), c[1].value(), c[2].value()};
}

double divergence(ad::Tape& tape, const ad::DualFunction& hid, const Vec3& x, double frame) {
  return divergence_of(velocity_jet(tape, hid, x, frame)).value();
}

}  // namespace pinf::physics
