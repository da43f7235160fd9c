#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"
#include "common/vocab.hpp"

namespace s2g::dec {

/// Target does not fit in the decoder width.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Strips the trailing "$", reverses, and pads with the empty symbol to
/// exactly `width` ids: "29$" at width 3 becomes [9, 2, <empty>].
std::vector<int> prepare_target(std::span<const std::string> target, std::size_t width, const Vocabulary& vocab);

/// Column-wise argmax (lowest id on ties).
std::vector<int> column_argmax(std::span<const double> logits, std::size_t cols, std::size_t classes);

/// Collects column predictions up to the first empty symbol, reverses them,
/// and appends "$". `logits` is [W x V].
std::vector<std::string> decode_readout(const ad::Tensor& logits, const Vocabulary& vocab);
std::vector<std::string> decode_readout_ids(std::span<const int> column_ids, const Vocabulary& vocab);

}  // namespace s2g::dec
