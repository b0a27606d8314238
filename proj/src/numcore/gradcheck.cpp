#include "sar/numcore/gradcheck.hpp"

#include "sar/errors.hpp"
#include "sar/numcore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sar::nc {

namespace {

double evaluate(const std::function<Tensor()>& objective) {
  TapeScope no_recording(nullptr);
  return objective().item();
}

double central_difference(const std::function<Tensor()>& objective, Tensor& leaf,
                          std::size_t index, double step) {
  auto values = leaf.mutable_values();
  const double original = values[index];
  values[index] = original + step;
  const double plus = evaluate(objective);
  values[index] = original - step;
  const double minus = evaluate(objective);
  values[index] = original;
  return (plus - minus) / (2.0 * step);
}

}  // namespace

GradCheckResult check_gradients(const std::function<Tensor()>& objective,
                                std::vector<Tensor> leaves, const GradCheckOptions& options) {
  for (Tensor& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(&tape);
    const Tensor root = objective();
    tape.backward(root);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (Tensor& leaf : leaves) {
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    std::vector<std::size_t> coords(leaf.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coordinates_per_leaf != 0 && coords.size() > options.max_coordinates_per_leaf) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coordinates_per_leaf);
    }

    double analytic_scale = 0.0;
    for (double g : analytic) analytic_scale = std::max(analytic_scale, std::abs(g));
    double numeric_scale = 0.0;
    double max_diff = 0.0;
    double max_jitter = 0.0;
    for (std::size_t index : coords) {
      const double numeric = central_difference(objective, leaf, index, options.step);
      const double half = central_difference(objective, leaf, index, options.step / 2.0);
      numeric_scale = std::max(numeric_scale, std::abs(numeric));
      max_diff = std::max(max_diff, std::abs(numeric - analytic[index]));
      max_jitter = std::max(max_jitter, std::abs(numeric - half));
    }
    result.coordinates += coords.size();
    const double scale = std::max({analytic_scale, numeric_scale, options.absolute_floor});
    result.max_rel_error = std::max(result.max_rel_error, max_diff / scale);
    if (max_jitter > options.smoothness_tolerance * scale) result.smooth = false;
    leaf.clear_grad();
  }
  return result;
}

}  // namespace sar::nc
