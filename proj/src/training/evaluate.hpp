#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "taskgen/task.hpp"

namespace s2g::train {

struct Bucket {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
  double error() const {
    return count ? static_cast<double>(count - correct) / static_cast<double>(count) : 0.0;
  }
};

/// bAbI tasks above this error count as failed (strictly greater).
inline constexpr double kFailedTaskError = 0.05;

struct EvalReport {
  std::string split;
  bool classification = false;
  Bucket overall;
  std::map<std::string, Bucket> instructions;  // program task only
  std::map<int, Bucket> tasks;                 // bAbI only

  double accuracy() const { return overall.accuracy(); }
  std::size_t failed_tasks() const;
  std::string format() const;
};

/// Predicts the decoded target tokens (ending in "$") or the label of each
/// input in a batch.
using SequencePredictor = std::function<std::vector<std::vector<std::string>>(const std::vector<task::Example>&)>;
using LabelPredictor = std::function<std::vector<std::string>(const std::vector<task::Example>&)>;

EvalReport evaluate_sequences(task::Task task, const std::string& split, const std::vector<task::Example>& examples,
                              const SequencePredictor& predict, std::size_t batch = 128);
EvalReport evaluate_labels(const std::string& split, const std::vector<task::Example>& examples,
                           const LabelPredictor& predict, std::size_t batch = 128);

/// Best and mean +- sample std over several runs.
struct SeedSummary {
  std::vector<double> values;
  double best() const;
  double mean() const;
  double stddev() const;
};

}  // namespace s2g::train
