#include "bret/nn/adam.hpp"

#include <cmath>

#include "bret/error.hpp"

namespace bret {

AdamOutcome adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  require_dim(grad.size(), params.size(), "adam gradient");
  require_dim(state.first_moment.size(), params.size(), "adam first moment");
  require_dim(state.second_moment.size(), params.size(), "adam second moment");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) return AdamOutcome{false, i};
  }

  const auto& hp = state.hp;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * grad[i];
    v = hp.beta2 * v + (1.0 - hp.beta2) * grad[i] * grad[i];
    params[i] -= hp.lr * (m / c1) / (std::sqrt(v / c2) + hp.eps);
  }
  return {};
}

}  // namespace bret
