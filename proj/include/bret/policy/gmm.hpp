#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bret {

/// K-mode diagonal Gaussian mixture over D_a-dimensional actions.
struct GmmParams {
  std::size_t modes = 0;
  std::size_t action_dim = 0;
  std::vector<double> weights;  // [K], on the simplex
  std::vector<double> means;    // [K][D_a] row-major
  std::vector<double> stds;     // [K][D_a] row-major, > 0

  double mean(std::size_t k, std::size_t d) const { return means[k * action_dim + d]; }
  double stddev(std::size_t k, std::size_t d) const { return stds[k * action_dim + d]; }
};

/// Raw head output layout: K logits, then K*D_a means, then K*D_a
/// pre-softplus scales. Total K*(1 + 2*D_a).
inline std::size_t gmm_raw_width(std::size_t modes, std::size_t action_dim) {
  return modes * (1 + 2 * action_dim);
}

double softplus(double x);

/// weights = softmax(logits), stds = softplus(raw) + sigma_floor.
GmmParams gmm_from_raw(std::span<const double> raw, std::size_t modes, std::size_t action_dim,
                       double sigma_floor);

/// -log sum_k w_k prod_d N(a_d; mu_kd, sigma_kd), via log-sum-exp.
double gmm_nll(const GmmParams& params, std::span<const double> action);

struct GmmNllResult {
  double nll = 0.0;
  std::vector<double> grad_raw;  // d nll / d raw head outputs
};

/// NLL and its exact gradient with respect to the raw head outputs.
GmmNllResult gmm_nll_raw(std::span<const double> raw, std::size_t modes, std::size_t action_dim,
                         double sigma_floor, std::span<const double> action);

}  // namespace bret
