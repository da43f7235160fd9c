#pragma once

#include <cstdint>
#include <vector>

#include "autodiff/parameters.hpp"
#include "decoders/cnn_head.hpp"
#include "decoders/textcnn_head.hpp"
#include "seq2grid/encoder.hpp"

namespace s2g::train {

using ad::Tensor;

enum class HeadKind { Cnn, TextCnn };

struct ModelSpec {
  HeadKind head = HeadKind::Cnn;
  std::size_t rows = 3;
  std::size_t cols = 25;
  /// Inputs are already rows*cols grids of tokens (aligned toy layout); the
  /// embeddings are placed directly and the action encoder is unused.
  bool direct_input = false;
  grid::EncoderConfig encoder;
  dec::CnnHeadConfig cnn;
  dec::TextCnnHeadConfig textcnn;
};

/// Sequence-input grid-output network: seq2grid encoder followed by one of
/// the two grid decoders. Parameters are registered encoder first.
class Seq2GridModel {
 public:
  Seq2GridModel(ModelSpec spec, std::uint64_t seed);

  Seq2GridModel(const Seq2GridModel&) = delete;
  Seq2GridModel& operator=(const Seq2GridModel&) = delete;

  const ModelSpec& spec() const { return spec_; }
  ad::ParameterStore& parameters() { return store_; }
  const ad::ParameterStore& parameters() const { return store_; }
  const grid::Seq2GridParams& encoder() const { return encoder_; }

  grid::BatchEncoding encode(const std::vector<std::vector<int>>& inputs) const;

  /// [B x W x V] column logits from the CNN head.
  Tensor sequence_logits(const std::vector<std::vector<int>>& inputs) const;
  Tensor sequence_logits(const grid::Grid& grid) const;

  /// [B x labels] from the TextCNN head.
  Tensor class_logits(const std::vector<std::vector<int>>& inputs, bool training, ad::Rng& rng) const;

 private:
  ModelSpec spec_;
  ad::ParameterStore store_;
  grid::Seq2GridParams encoder_;
  dec::CnnHeadParams cnn_;
  dec::TextCnnHeadParams textcnn_;
};

}  // namespace s2g::train
