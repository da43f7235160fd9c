#pragma once

#include <string>
#include <vector>

#include "autodiff/checkpoint.hpp"
#include "autodiff/rng.hpp"
#include "autodiff/tensor.hpp"

namespace s2g::ad {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Ordered registry of trainable leaves. Order is registration order and is
/// what optimizers, checkpoints, and gradient checks iterate over.
class ParameterStore {
 public:
  Tensor add(std::string name, Tensor tensor);

  const std::vector<NamedParameter>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  void zero_grad();
  std::size_t scalar_count() const;

  void save(Checkpoint& ckpt, const std::string& prefix = "") const;
  /// Copies values in place; shapes must match exactly.
  void load(const Checkpoint& ckpt, const std::string& prefix = "");

  /// FNV-1a over names, shapes, and the raw bytes of every value.
  std::uint64_t checksum() const;

 private:
  std::vector<NamedParameter> items_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng);

}  // namespace s2g::ad
