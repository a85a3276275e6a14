#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pinf::ad {

enum class BlockKind { Matrix, Bias };

struct ParamBlock {
  int layer = 0;  // hidden layers are 0..N-1; the output head uses layer N
  BlockKind kind = BlockKind::Matrix;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for biases
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

/// Flat parameter vector with an aligned gradient buffer and a block layout.
///
/// Blocks are appended contiguously, so the layout map from
/// (layer, kind, row, col) to a flat index is a bijection onto [0, size()).
class ParamStore {
 public:
  std::size_t add_block(int layer, BlockKind kind, std::size_t rows, std::size_t cols);

  std::size_t index(int layer, BlockKind kind, std::size_t row, std::size_t col) const;
  const ParamBlock& block(int layer, BlockKind kind) const;
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  double* block_values(const ParamBlock& b) { return values_.data() + b.offset; }
  const double* block_values(const ParamBlock& b) const { return values_.data() + b.offset; }
  double* block_grad(const ParamBlock& b) { return grad_.data() + b.offset; }

  void zero_grad();

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

}  // namespace pinf::ad
