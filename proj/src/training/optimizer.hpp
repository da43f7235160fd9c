#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "autodiff/checkpoint.hpp"
#include "autodiff/parameters.hpp"

namespace s2g::train {

/// Optimizer invoked in an invalid state (e.g. a parameter without a gradient).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over every tensor of a ParameterStore.
class Adam {
 public:
  Adam(const ad::ParameterStore& params, AdamConfig config);

  /// One update at learning rate `lr`. Every parameter must hold a gradient.
  void step(ad::ParameterStore& params, double lr);
  void step(ad::ParameterStore& params) { step(params, config_.lr); }

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  void save(ad::Checkpoint& ckpt, const ad::ParameterStore& params) const;
  void load(const ad::Checkpoint& ckpt, const ad::ParameterStore& params);

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

enum class Schedule { Constant, WarmupDecay };

Schedule parse_schedule(const std::string& name);
std::string schedule_name(Schedule s);

/// constant: base; warmup_decay: base * min(step / warmup, sqrt(warmup / step)).
double lr_schedule(std::uint64_t step, Schedule scheme, double base, std::uint64_t warmup = 4000);

/// Scales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_global_norm(ad::ParameterStore& params, double max_norm);

}  // namespace s2g::train
