#pragma once

#include <memory>

#include "pinf/ad/dual.hpp"
#include "pinf/fields/mlp.hpp"
#include "pinf/render/domain.hpp"

namespace pinf::physics {

enum class OutputMap { Raw, Radiance };

/// Wraps a network as a DualFunction over scene coordinates (x, y, z, frame).
/// Radiance maps outputs to (r, g, b, sigma) with the model's activations.
/// All parameters are bound to `tape` once, at construction.
class NetworkField {
 public:
  NetworkField(ad::Tape& tape, fields::GrowingMlp& model, const render::Domain& dom, bool grown, OutputMap map);
  ad::DualFunction function() const;

 private:
  std::shared_ptr<fields::TapeMlp> net_;
  render::Domain dom_;
  int in_dim_;
  bool grown_;
  OutputMap map_;
};

}  // namespace pinf::physics
