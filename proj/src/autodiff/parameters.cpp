#include "autodiff/parameters.hpp"

#include <bit>
#include <cmath>

#include "common/fnv.hpp"

namespace s2g::ad {

Tensor ParameterStore::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ParameterError("duplicate parameter '" + name + "'");
  tensor.set_requires_grad(true);
  items_.push_back({std::move(name), tensor});
  return tensor;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.tensor);
  return out;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return p.tensor;
  }
  throw ParameterError("no parameter '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : items_) p.tensor.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.tensor.numel();
  return n;
}

void ParameterStore::save(Checkpoint& ckpt, const std::string& prefix) const {
  for (const auto& p : items_) ckpt.put(prefix + p.name, p.tensor);
}

void ParameterStore::load(const Checkpoint& ckpt, const std::string& prefix) {
  for (auto& p : items_) {
    const auto& entry = ckpt.at(prefix + p.name);
    if (entry.shape != p.tensor.shape()) {
      throw CheckpointError("parameter '" + p.name + "' has shape " + shape_str(entry.shape) + " in checkpoint, " +
                            shape_str(p.tensor.shape()) + " in model");
    }
    auto dst = p.tensor.mutable_data();
    std::copy(entry.values.begin(), entry.values.end(), dst.begin());
  }
}

std::uint64_t ParameterStore::checksum() const {
  std::string bytes;
  for (const auto& p : items_) {
    bytes += p.name;
    bytes += shape_str(p.tensor.shape());
    for (double v : p.tensor.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
  }
  return fnv1a64(bytes);
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_tensor(std::move(shape), -bound, bound, rng);
}

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng) {
  std::vector<double> values(numel(shape));
  for (auto& v : values) v = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(values));
}

}  // namespace s2g::ad
