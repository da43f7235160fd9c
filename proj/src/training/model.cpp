#include "training/model.hpp"

#include "autodiff/ops.hpp"
#include "common/vocab.hpp"

namespace s2g::train {

Seq2GridModel::Seq2GridModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  ad::Rng rng(seed);
  if (spec_.direct_input) {
    encoder_.embedding = grid::EmbeddingTable::create(spec_.encoder, rng, store_);
    encoder_.pad_id = spec_.encoder.pad_id;
  } else {
    encoder_ = grid::Seq2GridParams::create(spec_.encoder, rng, store_);
  }
  if (spec_.head == HeadKind::Cnn) {
    spec_.cnn.slot_dim = spec_.encoder.embed_dim;
    cnn_ = dec::CnnHeadParams::create(spec_.cnn, rng, store_);
  } else {
    spec_.textcnn.slot_dim = spec_.encoder.embed_dim;
    textcnn_ = dec::TextCnnHeadParams::create(spec_.textcnn, rng, store_);
  }
}

grid::BatchEncoding Seq2GridModel::encode(const std::vector<std::vector<int>>& inputs) const {
  if (!spec_.direct_input) return grid::encode_batch(inputs, encoder_, spec_.rows, spec_.cols);
  const std::size_t cells = spec_.rows * spec_.cols;
  std::vector<int> ids;
  ids.reserve(inputs.size() * cells);
  for (const auto& seq : inputs) {
    std::size_t n = seq.size();
    if (n == cells + 1 && seq.back() == Vocabulary::kEos) --n;
    if (n != cells) throw ad::DimensionError("model: direct input needs " + std::to_string(cells) + " tokens per instance");
    ids.insert(ids.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n));
  }
  Tensor cells_embedded = encoder_.embedding.lookup(ids);
  grid::BatchEncoding out;
  out.grid.slots = ad::reshape(cells_embedded, {inputs.size(), spec_.rows, spec_.cols, encoder_.slot_dim()});
  return out;
}

Tensor Seq2GridModel::sequence_logits(const std::vector<std::vector<int>>& inputs) const {
  return sequence_logits(encode(inputs).grid);
}

Tensor Seq2GridModel::sequence_logits(const grid::Grid& grid) const {
  if (spec_.head != HeadKind::Cnn) throw ad::ParameterError("model: sequence logits need the cnn head");
  return dec::cnn_forward(grid, cnn_);
}

Tensor Seq2GridModel::class_logits(const std::vector<std::vector<int>>& inputs, bool training, ad::Rng& rng) const {
  if (spec_.head != HeadKind::TextCnn) throw ad::ParameterError("model: class logits need the textcnn head");
  return dec::textcnn_forward(encode(inputs).grid, textcnn_, training, rng);
}

}  // namespace s2g::train
