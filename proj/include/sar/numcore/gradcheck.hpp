#pragma once

#include "sar/numcore/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace sar::nc {

struct GradCheckOptions {
  double step = 1e-3;
  // 0 checks every coordinate; otherwise a seeded sample of this many per leaf.
  std::size_t max_coordinates_per_leaf = 0;
  // Central differences at `step` and `step / 2` disagreeing by more than this
  // (relative to the leaf's gradient scale) marks the point as non-smooth.
  double smoothness_tolerance = 1e-5;
  // Floor on the relative-error denominator. Exactly-zero gradients make the
  // finite difference pure rounding noise (~1e-13 for O(1) objectives).
  double absolute_floor = 1e-8;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  // max over leaves of max_i |analytic_i - numeric_i| / max(|analytic|_inf, |numeric|_inf, floor)
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  // False when a ReLU-style kink sits within one step of the evaluation point;
  // the finite-difference oracle is not valid there.
  bool smooth = true;
};

// Compares reverse-mode gradients of a scalar objective against central
// finite differences. `objective` rebuilds the computation from the leaves
// each time it is called.
GradCheckResult check_gradients(const std::function<Tensor()>& objective,
                                std::vector<Tensor> leaves, const GradCheckOptions& options = {});

}  // namespace sar::nc
