#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rboxkit {

/// A scalar function that writes its analytic gradient into `grad`
/// (same length as the point) and returns its value.
using DifferentiableFn = std::function<double(std::span<const double> point, std::span<double> grad)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// Throws Error if any evaluation is non-finite.
double grad_check(const DifferentiableFn& f, std::span<const double> point, double h = 1e-5);

enum class GradTarget { smooth_l1, rpn, roi, angle_tangent_l1, angle_smooth_l1, angle_l2 };

std::string_view to_string(GradTarget target);

/// Parses "all", "smooth_l1", "rpn", "roi" or "angle:<variant>".
std::vector<GradTarget> parse_grad_targets(std::string_view names);

struct GradSuiteResult {
  GradTarget target;
  std::size_t trials = 0;
  double max_rel_error = 0.0;
};

/// Runs `trials` gradient checks of one loss at seeded random points sampled
/// away from the loss's kinks and singularities.
GradSuiteResult run_grad_suite(GradTarget target, std::size_t trials, std::uint64_t seed, double h = 1e-5);

}  // namespace rboxkit
