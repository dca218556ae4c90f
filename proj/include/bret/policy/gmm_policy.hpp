#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bret/data/dataset.hpp"
#include "bret/data/norm_stats.hpp"
#include "bret/nn/adam.hpp"
#include "bret/nn/mlp.hpp"
#include "bret/nn/rng.hpp"
#include "bret/policy/gmm.hpp"

namespace bret {

struct PolicyConfig {
  std::size_t modes = 5;
  std::vector<std::size_t> hidden{64, 64};
  double sigma_floor = 1e-4;
  bool goal_conditioned = false;
};

/// Feedforward behavior-cloning policy with a Gaussian-mixture action head.
///
/// Observations (and goals, for the goal-conditioned variant) are normalized
/// with the prior statistics, passed through the trunk MLP and a ReLU, then a
/// linear head produces raw mixture parameters (see gmm_raw_width). The
/// mixture lives in normalized action units.
struct GmmPolicy {
  Mlp trunk;
  Mlp head;
  std::size_t modes = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  double sigma_floor = 1e-4;
  bool goal_conditioned = false;
  NormStats norm;
};

GmmPolicy init_policy(const PolicyConfig& config, std::size_t state_dim, std::size_t action_dim,
                      NormStats norm, SeededRng& rng);

/// Mixture over normalized actions. `observation` is in raw units; `goal`
/// is a normalized state (as returned by make_goal) and must be present
/// exactly when the policy is goal conditioned.
GmmParams policy_forward(const GmmPolicy& policy, std::span<const double> observation,
                         std::optional<std::span<const double>> goal = std::nullopt);

/// Draws k ~ weights, then a ~ N(mu_k, (var_scale*sigma_k)^2), returned in
/// raw action units. var_scale == 0 returns the mean of the highest-weight
/// mode without consuming randomness.
std::vector<double> sample_action(const GmmPolicy& policy, std::span<const double> observation,
                                  SeededRng& rng, double var_scale,
                                  std::optional<std::span<const double>> goal = std::nullopt);

/// Normalized final state of a uniformly chosen episode.
std::vector<double> make_goal(const DatasetStore& task, const NormStats& norm, SeededRng& rng);

struct BcConfig {
  std::size_t steps = 5000;
  std::size_t batch = 32;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

struct BcResult {
  GmmPolicy policy;
  std::vector<double> loss_trace;
  /// Per step: {task samples, retrieved samples}.
  std::vector<std::array<std::uint32_t, 2>> batch_composition;
};

/// Minimizes E_task[-log pi(a|s)] + E_retrieved[-log pi(a|s)].
///
/// Each step draws `batch` task indices, then `batch` retrieved indices, both
/// uniform with replacement, and takes one Adam step on the sum of the two
/// batch means. An empty retrieved store trains on the task term alone and
/// draws nothing for it. Goal-conditioned policies see each sample paired
/// with the final state of its own episode.
BcResult train_bc(GmmPolicy policy, const DatasetStore& task, const DatasetStore& retrieved,
                  const BcConfig& config, SeededRng& rng);

/// Mean NLL of the policy over every transition of a store.
double mean_nll(const GmmPolicy& policy, const DatasetStore& store);

}  // namespace bret
