#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "taskgen/generators.hpp"
#include "taskgen/task.hpp"
#include "training/model.hpp"
#include "training/optimizer.hpp"

namespace s2g::train {

/// Everything needed to reproduce a training run. Serialized as one
/// "key=value" per line.
struct RunConfig {
  task::Task task = task::Task::ToyAddition;
  HeadKind head = HeadKind::Cnn;
  task::ToyLayout layout = task::ToyLayout::Sequential;
  std::size_t rows = 3, cols = 25;
  std::size_t embed = 64, hidden = 128, layers = 3;
  std::size_t channels = 64, bottleneck = 32, blocks_per_stack = 1;
  std::size_t kernel_channels = 128;
  double dropout = 0.4;
  std::uint64_t steps = 30000;
  std::size_t batch = 64;
  double lr = 1e-3;
  Schedule schedule = Schedule::Constant;
  std::uint64_t warmup = 4000;
  double clip = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t eval_every = 1000;
  std::uint64_t checkpoint_every = 1000;
  std::size_t eval_limit = 0;  // 0 evaluates whole splits during training

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  /// Applies one "key=value" setting; throws task::ConfigError on unknown
  /// keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// Hash of the settings that determine parameter shapes.
  std::uint64_t architecture_hash() const;

  ModelSpec model_spec(std::size_t vocab_size, std::size_t labels) const;
};

/// Defaults per task (3x25 grid for the arithmetic tasks, a
/// 4x8 grid, two layers and the warm-up schedule for bAbI).
RunConfig default_config(task::Task t);

/// "3x25" -> {3, 25}.
std::pair<std::size_t, std::size_t> parse_grid(const std::string& text);

}  // namespace s2g::train
