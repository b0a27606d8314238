#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sar::eval {

struct GradCheckSuiteOptions {
  std::size_t instances = 100;  // accepted instances per operation
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  double step = 1e-3;
  // Draws rejected because a kink lies within one step; caps the retries.
  std::size_t max_resamples = 1000;
};

struct OpGradCheck {
  std::string op;
  std::size_t instances = 0;
  std::size_t resampled = 0;
  double max_rel_error = 0.0;
  double seconds = 0.0;
  bool passed = false;
};

std::vector<std::string> gradcheck_operations();

// Random small instances of every differentiable operation, checked against
// central finite differences. Instances that straddle a ReLU kink are redrawn.
std::vector<OpGradCheck> run_gradcheck_suite(const GradCheckSuiteOptions& options = {},
                                             const std::vector<std::string>& only = {});

void write_gradcheck_table(std::ostream& out, const std::vector<OpGradCheck>& results);

}  // namespace sar::eval
