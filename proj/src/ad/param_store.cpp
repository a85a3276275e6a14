#include "pinf/ad/param_store.hpp"

#include <algorithm>

#include "pinf/common.hpp"

namespace pinf::ad {

std::size_t ParamStore::add_block(int layer, BlockKind kind, std::size_t rows, std::size_t cols) {
  for (const auto& b : blocks_) {
    if (b.layer == layer && b.kind == kind) throw StructuralError("duplicate parameter block");
  }
  ParamBlock b{layer, kind, rows, cols, values_.size()};
  blocks_.push_back(b);
  values_.resize(values_.size() + b.size(), 0.0);
  grad_.resize(values_.size(), 0.0);
  return blocks_.size() - 1;
}

const ParamBlock& ParamStore::block(int layer, BlockKind kind) const {
  for (const auto& b : blocks_) {
    if (b.layer == layer && b.kind == kind) return b;
  }
  throw StructuralError("no parameter block for layer " + std::to_string(layer));
}

std::size_t ParamStore::index(int layer, BlockKind kind, std::size_t row, std::size_t col) const {
  const auto& b = block(layer, kind);
  if (row >= b.rows || col >= b.cols) throw ArgumentError("parameter index out of range");
  return b.offset + row * b.cols + col;
}

void ParamStore::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace pinf::ad
