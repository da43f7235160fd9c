#include "autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace s2g::ad {

double gradient_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + 1e-8);
}

namespace {

struct Probe {
  double value;
  std::uint64_t pattern;
};

Probe evaluate(const std::function<Tensor()>& loss) {
  KinkMonitor monitor;
  const double v = loss().item();
  return {v, monitor.pattern()};
}

}  // namespace

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                const GradCheckOptions& options) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  GradCheckResult result;
  std::uint64_t base_pattern = 0;
  {
    KinkMonitor monitor;
    Tensor base = loss();
    result.kink_margin = monitor.margin();
    base_pattern = monitor.pattern();
    base.backward();
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                       : std::vector<double>(p.numel(), 0.0));
  }

  NoGradGuard no_grad;
  const double h = options.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      bool crossed = false;
      auto central = [&](double step) {
        values[i] = original + step;
        const Probe up = evaluate(loss);
        values[i] = original - step;
        const Probe down = evaluate(loss);
        values[i] = original;
        crossed = crossed || up.pattern != base_pattern || down.pattern != base_pattern;
        return (up.value - down.value) / (2.0 * step);
      };
      double numeric = central(h);
      if (options.difference == Difference::Extrapolated) numeric = (4.0 * central(h / 2.0) - numeric) / 3.0;
      if (crossed) ++result.kink_crossings;
      const double err = gradient_relative_error(analytic[k][i], numeric);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_analytic = analytic[k][i];
        result.worst_numeric = numeric;
        result.worst_tensor = k;
        result.worst_index = i;
      }
      ++result.coordinates;
    }
  }
  return result;
}

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params, double step) {
  return check_gradients(loss, params, GradCheckOptions{step, Difference::Central});
}

}  // namespace s2g::ad
