#pragma once

#include <string>
#include <vector>

#include "autodiff/parameters.hpp"
#include "seq2grid/grid.hpp"

namespace s2g::dec {

using ad::Tensor;

struct CnnHeadConfig {
  std::size_t slot_dim = 64;          ///< grid slot dimension, used as input channels
  std::size_t channels = 64;          ///< expanded width carried by the residual path
  std::vector<std::size_t> stacks = {32, 32, 32};  ///< bottleneck width per stack
  std::size_t blocks_per_stack = 1;
  std::size_t vocab_out = 0;          ///< logit classes, including the empty symbol
};

/// 1x1 reduce -> 3x3 -> 1x1 expand with an identity skip.
struct BottleneckParams {
  Tensor reduce_w, reduce_b;
  Tensor conv_w, conv_b;
  Tensor expand_w, expand_b;

  std::size_t channels() const { return reduce_w.dim(1); }
};

struct CnnHeadParams {
  Tensor proj_w, proj_b;  ///< 1x1 slot_dim -> channels
  std::vector<BottleneckParams> blocks;
  Tensor logit_w, logit_b;  ///< shared across columns: [channels x V], [V]

  static CnnHeadParams create(const CnnHeadConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                              const std::string& prefix = "cnn.");
};

/// relu(x + expand(relu(conv3(relu(reduce(x)))))). x is [C x H x W] or [B x C x H x W].
Tensor bottleneck_block(const Tensor& x, const BottleneckParams& params);

/// Runs the residual stacks over the grid (slot dimension as channels),
/// keeps the top list of the final feature map, and applies the column-wise
/// logit layer. Returns [W x V] for a single grid, [B x W x V] for a batch.
Tensor cnn_forward(const grid::Grid& grid, const CnnHeadParams& params);

}  // namespace s2g::dec
