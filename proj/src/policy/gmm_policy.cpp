#include "bret/policy/gmm_policy.hpp"

#include <algorithm>
#include <cmath>

#include "bret/error.hpp"

namespace bret {

GmmPolicy init_policy(const PolicyConfig& config, std::size_t state_dim, std::size_t action_dim,
                      NormStats norm, SeededRng& rng) {
  if (config.modes == 0) throw std::invalid_argument("policy: modes must be positive");
  if (config.hidden.empty()) throw std::invalid_argument("policy: need at least one hidden width");
  if (!(config.sigma_floor > 0.0)) throw std::invalid_argument("policy: sigma_floor must be positive");
  require_dim(norm.state_mean.size(), state_dim, "norm stats state");
  require_dim(norm.action_mean.size(), action_dim, "norm stats action");

  std::vector<std::size_t> widths{config.goal_conditioned ? 2 * state_dim : state_dim};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  GmmPolicy p;
  p.trunk.spec = MlpSpec::make(widths, Activation::relu);
  p.head.spec = MlpSpec::make({config.hidden.back(), gmm_raw_width(config.modes, action_dim)},
                              Activation::identity);
  p.trunk.params = init_params(p.trunk.spec, rng);
  p.head.params = init_params(p.head.spec, rng);
  p.modes = config.modes;
  p.state_dim = state_dim;
  p.action_dim = action_dim;
  p.sigma_floor = config.sigma_floor;
  p.goal_conditioned = config.goal_conditioned;
  p.norm = std::move(norm);
  return p;
}

namespace {

std::vector<double> policy_input(const GmmPolicy& policy, std::span<const double> observation,
                                 std::optional<std::span<const double>> goal) {
  require_dim(observation.size(), policy.state_dim, "policy observation");
  if (goal.has_value() != policy.goal_conditioned) {
    throw std::invalid_argument(policy.goal_conditioned ? "policy is goal conditioned: goal required"
                                                        : "policy is not goal conditioned: unexpected goal");
  }
  auto x = policy.norm.normalize_state(observation);
  if (goal) {
    require_dim(goal->size(), policy.state_dim, "policy goal");
    x.insert(x.end(), goal->begin(), goal->end());
  }
  return x;
}

std::vector<double> raw_outputs(const GmmPolicy& policy, std::span<const double> x) {
  auto h = mlp_forward(policy.trunk.spec, policy.trunk.params, x);
  for (double& v : h) v = v > 0.0 ? v : 0.0;
  return mlp_forward(policy.head.spec, policy.head.params, h);
}

}  // namespace

GmmParams policy_forward(const GmmPolicy& policy, std::span<const double> observation,
                         std::optional<std::span<const double>> goal) {
  const auto x = policy_input(policy, observation, goal);
  return gmm_from_raw(raw_outputs(policy, x), policy.modes, policy.action_dim, policy.sigma_floor);
}

std::vector<double> sample_action(const GmmPolicy& policy, std::span<const double> observation,
                                  SeededRng& rng, double var_scale,
                                  std::optional<std::span<const double>> goal) {
  if (!(var_scale >= 0.0)) throw std::invalid_argument("var_scale must be non-negative");
  const GmmParams g = policy_forward(policy, observation, goal);
  std::size_t k = 0;
  if (var_scale == 0.0) {
    k = static_cast<std::size_t>(std::max_element(g.weights.begin(), g.weights.end()) - g.weights.begin());
  } else {
    double u = rng.uniform();
    k = g.modes - 1;
    for (std::size_t i = 0; i < g.modes; ++i) {
      if (u < g.weights[i]) {
        k = i;
        break;
      }
      u -= g.weights[i];
    }
  }
  std::vector<double> a(g.action_dim);
  for (std::size_t d = 0; d < g.action_dim; ++d) {
    a[d] = g.mean(k, d);
    if (var_scale > 0.0) a[d] += var_scale * g.stddev(k, d) * rng.normal();
  }
  return policy.norm.denormalize_action(a);
}

std::vector<double> make_goal(const DatasetStore& task, const NormStats& norm, SeededRng& rng) {
  if (task.empty()) throw DataError("make_goal: empty task store");
  const auto ep = task.episode(rng.index(task.num_episodes()));
  return norm.normalize_state(ep.back().state);
}

double mean_nll(const GmmPolicy& policy, const DatasetStore& store) {
  if (store.empty()) throw DataError("mean_nll: empty store");
  double sum = 0.0;
  for (std::size_t e = 0; e < store.num_episodes(); ++e) {
    const auto ep = store.episode(e);
    const auto goal = policy.norm.normalize_state(ep.back().state);
    for (const Transition& tr : ep) {
      const auto g = policy.goal_conditioned
                         ? policy_forward(policy, tr.state, std::span<const double>(goal))
                         : policy_forward(policy, tr.state);
      sum += gmm_nll(g, policy.norm.normalize_action(tr.action));
    }
  }
  return sum / static_cast<double>(store.size());
}

}  // namespace bret
