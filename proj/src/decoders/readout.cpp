#include "decoders/readout.hpp"

#include <algorithm>

namespace s2g::dec {

std::vector<int> prepare_target(std::span<const std::string> target, std::size_t width, const Vocabulary& vocab) {
  std::size_t length = target.size();
  if (length > 0 && target[length - 1] == "$") --length;
  if (length > width) {
    throw CapacityError("target of " + std::to_string(length) + " tokens does not fit width " +
                        std::to_string(width));
  }
  std::vector<int> ids(width, Vocabulary::kEmpty);
  for (std::size_t i = 0; i < length; ++i) ids[i] = vocab.id(target[length - 1 - i]);
  return ids;
}

std::vector<int> column_argmax(std::span<const double> logits, std::size_t cols, std::size_t classes) {
  if (logits.size() != cols * classes) throw ad::DimensionError("column_argmax: logits size mismatch");
  std::vector<int> out(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const double* row = logits.data() + j * classes;
    out[j] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  return out;
}

std::vector<std::string> decode_readout_ids(std::span<const int> column_ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  for (int id : column_ids) {
    if (id == Vocabulary::kEmpty) break;
    tokens.push_back(vocab.token(id));
  }
  std::reverse(tokens.begin(), tokens.end());
  tokens.emplace_back("$");
  return tokens;
}

std::vector<std::string> decode_readout(const ad::Tensor& logits, const Vocabulary& vocab) {
  if (logits.rank() != 2) throw ad::DimensionError("decode_readout: logits must be [W x V]");
  const auto ids = column_argmax(logits.data(), logits.dim(0), logits.dim(1));
  return decode_readout_ids(ids, vocab);
}

}  // namespace s2g::dec
