#pragma once

#include <functional>
#include <span>

#include "autodiff/tensor.hpp"

namespace s2g::ad {

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;
/// Base step of the extrapolated estimator used for deep composites.
inline constexpr double kExtrapolatedStep = 2e-3;

/// |analytic - numeric| / (|analytic| + 1e-8)
double gradient_relative_error(double analytic, double numeric);

enum class Difference {
  /// (f(x+h) - f(x-h)) / 2h
  Central,
  /// Richardson extrapolation of two central differences at h and h/2
  /// (five-point stencil, error O(h^4)).
  Extrapolated,
};

struct GradCheckOptions {
  double step = kFiniteDifferenceStep;
  Difference difference = Difference::Central;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  /// Gradients at the worst coordinate.
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  /// Smallest distance of a relu / max-pool input to its kink at the base point.
  double kink_margin = 0.0;
  /// Coordinates whose perturbed evaluations took a different relu / max-pool
  /// branch than the base point.
  std::size_t kink_crossings = 0;
};

/// Compares reverse-mode gradients of `loss` with finite differences for
/// every coordinate of every tensor in `params`. `loss` must rebuild the
/// graph from the current parameter values on each call.
GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                const GradCheckOptions& options);
GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                double step = kFiniteDifferenceStep);

}  // namespace s2g::ad
