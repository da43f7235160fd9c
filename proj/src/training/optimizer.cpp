#include "training/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace s2g::train {

using ad::Tensor;

Adam::Adam(const ad::ParameterStore& params, AdamConfig config) : config_(config) {
  for (const auto& p : params.items()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(ad::ParameterStore& params, double lr) {
  const auto& items = params.items();
  if (items.size() != m_.size()) throw StateError("adam: parameter set changed since construction");
  for (const auto& p : items) {
    if (!p.tensor.has_grad()) throw StateError("adam: parameter '" + p.name + "' has no gradient");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correct1 = 1.0 - std::pow(config_.beta1, t);
  const double correct2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < items.size(); ++k) {
    Tensor param = items[k].tensor;
    auto value = param.mutable_data();
    const auto grad = param.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::save(ad::Checkpoint& ckpt, const ad::ParameterStore& params) const {
  const auto& items = params.items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    ckpt.put("adam.m/" + items[k].name, items[k].tensor.shape(), m_[k]);
    ckpt.put("adam.v/" + items[k].name, items[k].tensor.shape(), v_[k]);
  }
  ckpt.put("adam.steps", {1}, {static_cast<double>(steps_)});
}

void Adam::load(const ad::Checkpoint& ckpt, const ad::ParameterStore& params) {
  const auto& items = params.items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& m = ckpt.at("adam.m/" + items[k].name);
    const auto& v = ckpt.at("adam.v/" + items[k].name);
    if (m.values.size() != m_[k].size() || v.values.size() != v_[k].size()) {
      throw StateError("adam: moment shape mismatch for '" + items[k].name + "'");
    }
    m_[k] = m.values;
    v_[k] = v.values;
  }
  steps_ = static_cast<std::uint64_t>(ckpt.at("adam.steps").values.at(0));
}

Schedule parse_schedule(const std::string& name) {
  if (name == "constant") return Schedule::Constant;
  if (name == "warmup_decay") return Schedule::WarmupDecay;
  throw std::invalid_argument("unknown learning-rate schedule '" + name + "'");
}

std::string schedule_name(Schedule s) { return s == Schedule::Constant ? "constant" : "warmup_decay"; }

double lr_schedule(std::uint64_t step, Schedule scheme, double base, std::uint64_t warmup) {
  if (step == 0) throw std::invalid_argument("lr_schedule: steps are 1-based");
  if (scheme == Schedule::Constant) return base;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(std::max<std::uint64_t>(warmup, 1));
  return base * std::min(s / w, std::sqrt(w / s));
}

double clip_global_norm(ad::ParameterStore& params, double max_norm) {
  double total = 0.0;
  for (const auto& p : params.items()) {
    for (double g : p.tensor.grad()) total += g * g;
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& p : params.items()) {
      Tensor t = p.tensor;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace s2g::train
