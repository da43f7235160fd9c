#include "training/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "taskgen/program.hpp"

namespace s2g::train {

std::size_t EvalReport::failed_tasks() const {
  return static_cast<std::size_t>(
      std::count_if(tasks.begin(), tasks.end(), [](const auto& kv) { return kv.second.error() > kFailedTaskError; }));
}

std::string EvalReport::format() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-9s n=%-6zu %s=%.4f\n", split.c_str(), overall.count,
                classification ? "error" : "accuracy", classification ? overall.error() : overall.accuracy());
  out << buf;
  for (const auto& [name, b] : instructions) {
    std::snprintf(buf, sizeof buf, "  instruction %-8s n=%-6zu accuracy=%.4f\n", name.c_str(), b.count, b.accuracy());
    out << buf;
  }
  if (!tasks.empty()) {
    for (const auto& [id, b] : tasks) {
      std::snprintf(buf, sizeof buf, "  task %2d n=%-6zu error=%6.2f%%%s\n", id, b.count, 100.0 * b.error(),
                    b.error() > kFailedTaskError ? "  failed" : "");
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  failed tasks (>5%% error): %zu\n", failed_tasks());
    out << buf;
  }
  return out.str();
}

EvalReport evaluate_sequences(task::Task task, const std::string& split, const std::vector<task::Example>& examples,
                              const SequencePredictor& predict, std::size_t batch) {
  EvalReport r;
  r.split = split;
  if (task == task::Task::Program) {
    for (const auto& name : task::kInstructionTypes) r.instructions[name];
  }
  for (std::size_t start = 0; start < examples.size(); start += batch) {
    const std::size_t end = std::min(examples.size(), start + batch);
    std::vector<task::Example> chunk(examples.begin() + static_cast<std::ptrdiff_t>(start),
                                     examples.begin() + static_cast<std::ptrdiff_t>(end));
    const auto preds = predict(chunk);
    if (preds.size() != chunk.size()) throw std::logic_error("predictor returned the wrong number of outputs");
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const bool ok = preds[i] == chunk[i].target;
      ++r.overall.count;
      r.overall.correct += ok;
      if (task == task::Task::Program) {
        for (const auto& name : task::instruction_types(task::canonical_input(chunk[i]))) {
          auto& b = r.instructions[name];
          ++b.count;
          b.correct += ok;
        }
      }
    }
  }
  return r;
}

EvalReport evaluate_labels(const std::string& split, const std::vector<task::Example>& examples,
                           const LabelPredictor& predict, std::size_t batch) {
  EvalReport r;
  r.split = split;
  r.classification = true;
  for (std::size_t start = 0; start < examples.size(); start += batch) {
    const std::size_t end = std::min(examples.size(), start + batch);
    std::vector<task::Example> chunk(examples.begin() + static_cast<std::ptrdiff_t>(start),
                                     examples.begin() + static_cast<std::ptrdiff_t>(end));
    const auto preds = predict(chunk);
    if (preds.size() != chunk.size()) throw std::logic_error("predictor returned the wrong number of outputs");
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const bool ok = preds[i] == chunk[i].label;
      ++r.overall.count;
      r.overall.correct += ok;
      if (!chunk[i].difficulty.empty()) {
        auto& b = r.tasks[chunk[i].difficulty[0]];
        ++b.count;
        b.correct += ok;
      }
    }
  }
  return r;
}

double SeedSummary::best() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

double SeedSummary::mean() const {
  return values.empty() ? 0.0 : std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double SeedSummary::stddev() const {
  if (values.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace s2g::train
