#include "pinf/physics/network_field.hpp"

namespace pinf::physics {

NetworkField::NetworkField(ad::Tape& tape, fields::GrowingMlp& model, const render::Domain& dom, bool grown,
                           OutputMap map)
    : net_(std::make_shared<fields::TapeMlp>(tape, model)),
      dom_(dom),
      in_dim_(model.shape().in_dim),
      grown_(grown),
      map_(map) {}

ad::DualFunction NetworkField::function() const {
  return [net = net_, dom = dom_, in = in_dim_, grown = grown_, map = map_](ad::Tape&, std::span<const ad::Dual> x) {
    if (x.size() != 4) throw ArgumentError("network field expects (x, y, z, frame)");
    std::vector<ad::Dual> n;
    for (std::size_t a = 0; a < 3; ++a) n.push_back(x[a] * dom.space_scale(a) + (-1.0 - dom.box.lo[a] * dom.space_scale(a)));
    if (in == 4) n.push_back(x[3] * dom.time_scale());
    auto out = net->eval(n, grown);
    if (map == OutputMap::Radiance) {
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(c)] = ad::logistic(out[static_cast<std::size_t>(c)]);
      out[3] = ad::softplus(out[3]);
    }
    return out;
  };
}

}  // namespace pinf::physics
