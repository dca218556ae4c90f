#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bret {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig config)
      : first_moment(n, 0.0), second_moment(n, 0.0), hp(config) {}

  std::uint64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  AdamConfig hp;
};

struct AdamOutcome {
  bool applied = true;
  /// Index of the first non-finite gradient component when the step was skipped.
  std::optional<std::size_t> non_finite_index;
};

/// One bias-corrected Adam update in place. A gradient with any NaN/inf
/// component leaves params and state untouched and is reported in the outcome.
AdamOutcome adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

}  // namespace bret
