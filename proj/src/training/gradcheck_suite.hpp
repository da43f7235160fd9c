#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace s2g::train {

struct GradSuiteOptions {
  std::size_t instances = 100;
  std::uint64_t seed = 1;
  /// Adds the "faulty_square" fixture whose backward is deliberately wrong.
  bool include_faulty = false;
  /// Restricts the run to these case names (empty runs all).
  std::vector<std::string> only;
};

struct GradRow {
  std::string name;
  /// "central" (h=1e-5) or "extrapolated" (deep composites).
  std::string difference;
  std::size_t instances = 0;
  std::size_t redrawn = 0;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double worst_analytic = 0.0, worst_numeric = 0.0;
  bool pass = false;
};

std::vector<std::string> gradcheck_case_names(bool include_faulty);
std::vector<GradRow> run_gradcheck_suite(const GradSuiteOptions& options);
std::string format_gradcheck(const std::vector<GradRow>& rows);

}  // namespace s2g::train
