#include "decoders/cnn_head.hpp"

#include "autodiff/ops.hpp"

namespace s2g::dec {

namespace {

Tensor conv_weight(std::size_t out, std::size_t in, std::size_t k, ad::Rng& rng) {
  return ad::glorot_uniform({out, in, k, k}, in * k * k, out * k * k, rng);
}

/// Grid slots [B x H x W x h] -> feature map [B x h x H x W].
Tensor grid_to_channels(const grid::Grid& grid) {
  const Tensor& s = grid.slots;
  if (grid.batched()) return ad::permute(s, {0, 3, 1, 2});
  return ad::permute(s, {2, 0, 1});
}

}  // namespace

CnnHeadParams CnnHeadParams::create(const CnnHeadConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                                    const std::string& prefix) {
  if (config.vocab_out == 0 || config.channels == 0 || config.slot_dim == 0) {
    throw ad::ParameterError("cnn head: slot dimension, channels, and vocabulary must be positive");
  }
  CnnHeadParams p;
  const std::size_t c = config.channels;
  p.proj_w = store.add(prefix + "proj.w", conv_weight(c, config.slot_dim, 1, rng));
  p.proj_b = store.add(prefix + "proj.b", Tensor::zeros({c}));
  std::size_t index = 0;
  for (std::size_t width : config.stacks) {
    for (std::size_t k = 0; k < config.blocks_per_stack; ++k, ++index) {
      const std::string name = prefix + "block" + std::to_string(index) + ".";
      BottleneckParams b;
      b.reduce_w = store.add(name + "reduce.w", conv_weight(width, c, 1, rng));
      b.reduce_b = store.add(name + "reduce.b", Tensor::zeros({width}));
      b.conv_w = store.add(name + "conv.w", conv_weight(width, width, 3, rng));
      b.conv_b = store.add(name + "conv.b", Tensor::zeros({width}));
      b.expand_w = store.add(name + "expand.w", conv_weight(c, width, 1, rng));
      b.expand_b = store.add(name + "expand.b", Tensor::zeros({c}));
      p.blocks.push_back(b);
    }
  }
  p.logit_w = store.add(prefix + "logit.w", ad::glorot_uniform({c, config.vocab_out}, c, config.vocab_out, rng));
  p.logit_b = store.add(prefix + "logit.b", Tensor::zeros({config.vocab_out}));
  return p;
}

Tensor bottleneck_block(const Tensor& x, const BottleneckParams& params) {
  const std::size_t channel_axis = x.rank() == 4 ? 1 : 0;
  if (x.rank() < 3 || x.dim(channel_axis) != params.channels()) {
    throw ad::DimensionError("bottleneck_block: input " + ad::shape_str(x.shape()) + " does not have " +
                             std::to_string(params.channels()) + " channels");
  }
  Tensor y = ad::relu(ad::conv2d(x, params.reduce_w, params.reduce_b));
  y = ad::relu(ad::conv2d(y, params.conv_w, params.conv_b));
  y = ad::conv2d(y, params.expand_w, params.expand_b);
  return ad::relu(x + y);
}

Tensor cnn_forward(const grid::Grid& grid, const CnnHeadParams& params) {
  Tensor features = ad::conv2d(grid_to_channels(grid), params.proj_w, params.proj_b);
  for (const auto& block : params.blocks) features = bottleneck_block(features, block);

  const std::size_t batch = grid.batch();
  const std::size_t cols = grid.cols();
  const std::size_t channels = params.proj_w.dim(0);
  // [B x C x H x W] -> top list [B x C x W] -> [B*W x C]
  const Tensor batched = grid.batched() ? features : ad::reshape(features, {1, channels, grid.rows(), cols});
  Tensor top = ad::reshape(ad::slice(batched, 2, 0, 1), {batch, channels, cols});
  top = ad::reshape(ad::permute(top, {0, 2, 1}), {batch * cols, channels});
  Tensor logits = ad::linear(top, params.logit_w, params.logit_b);
  const std::size_t vocab = params.logit_w.dim(1);
  if (grid.batched()) return ad::reshape(logits, {batch, cols, vocab});
  return logits;
}

}  // namespace s2g::dec
