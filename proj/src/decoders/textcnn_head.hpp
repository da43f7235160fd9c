#pragma once

#include <string>
#include <vector>

#include "autodiff/parameters.hpp"
#include "autodiff/rng.hpp"
#include "seq2grid/grid.hpp"

namespace s2g::dec {

using ad::Tensor;

struct TextCnnHeadConfig {
  std::size_t slot_dim = 64;
  std::vector<std::size_t> kernel_sizes = {2, 3, 4};
  std::size_t channels = 128;  ///< filters per kernel size
  double dropout = 0.4;
  std::size_t labels = 0;
};

struct TextCnnHeadParams {
  std::vector<std::size_t> kernel_sizes;
  std::vector<Tensor> conv_w, conv_b;
  Tensor logit_w, logit_b;
  double dropout = 0.4;

  static TextCnnHeadParams create(const TextCnnHeadConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                                  const std::string& prefix = "textcnn.");
};

/// Pooled feature vector before dropout: concat over k of
/// max_pool(relu(conv_k(grid))). [sum channels] or [B x sum channels].
Tensor textcnn_features(const grid::Grid& grid, const TextCnnHeadParams& params);

/// Label logits [labels] or [B x labels]. Dropout is applied only when
/// `training` is set.
Tensor textcnn_forward(const grid::Grid& grid, const TextCnnHeadParams& params, bool training, ad::Rng& rng);

}  // namespace s2g::dec
