#include "decoders/textcnn_head.hpp"

#include "autodiff/ops.hpp"

namespace s2g::dec {

TextCnnHeadParams TextCnnHeadParams::create(const TextCnnHeadConfig& config, ad::Rng& rng,
                                            ad::ParameterStore& store, const std::string& prefix) {
  if (config.labels == 0 || config.channels == 0 || config.kernel_sizes.empty()) {
    throw ad::ParameterError("textcnn head: labels, channels, and kernel sizes must be non-empty");
  }
  TextCnnHeadParams p;
  p.kernel_sizes = config.kernel_sizes;
  p.dropout = config.dropout;
  for (std::size_t k : config.kernel_sizes) {
    const std::string name = prefix + "conv" + std::to_string(k) + ".";
    const std::size_t in = config.slot_dim, out = config.channels;
    p.conv_w.push_back(store.add(name + "w", ad::glorot_uniform({out, in, k, k}, in * k * k, out * k * k, rng)));
    p.conv_b.push_back(store.add(name + "b", Tensor::zeros({out})));
  }
  const std::size_t features = config.channels * config.kernel_sizes.size();
  p.logit_w = store.add(prefix + "logit.w", ad::glorot_uniform({features, config.labels}, features, config.labels, rng));
  p.logit_b = store.add(prefix + "logit.b", Tensor::zeros({config.labels}));
  return p;
}

Tensor textcnn_features(const grid::Grid& grid, const TextCnnHeadParams& params) {
  const Tensor maps = grid.batched() ? ad::permute(grid.slots, {0, 3, 1, 2}) : ad::permute(grid.slots, {2, 0, 1});
  const std::size_t batch = grid.batch();
  std::vector<Tensor> pooled;
  for (std::size_t i = 0; i < params.kernel_sizes.size(); ++i) {
    const Tensor act = ad::relu(ad::conv2d(maps, params.conv_w[i], params.conv_b[i]));
    const Tensor pool = ad::max_pool2d(act, grid.rows(), grid.cols());
    pooled.push_back(ad::reshape(pool, {batch, params.conv_w[i].dim(0)}));
  }
  Tensor features = ad::concat(pooled, 1);
  if (!grid.batched()) features = ad::reshape(features, {features.dim(1)});
  return features;
}

Tensor textcnn_forward(const grid::Grid& grid, const TextCnnHeadParams& params, bool training, ad::Rng& rng) {
  Tensor features = ad::dropout(textcnn_features(grid, params), params.dropout, training, rng);
  const bool single = features.rank() == 1;
  if (single) features = ad::reshape(features, {1, features.dim(0)});
  Tensor logits = ad::linear(features, params.logit_w, params.logit_b);
  if (single) logits = ad::reshape(logits, {logits.dim(1)});
  return logits;
}

}  // namespace s2g::dec
