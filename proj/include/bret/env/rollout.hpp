#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bret/data/dataset.hpp"
#include "bret/env/expert.hpp"
#include "bret/env/pick_place.hpp"
#include "bret/policy/gmm_policy.hpp"

namespace bret {

/// Maps an observation to an action; may draw from the supplied rng.
using ActionFn = std::function<std::vector<double>(const EnvState& state, SeededRng& rng)>;

ActionFn expert_actor(const PickPlaceEnv& env, PickPlaceTask task, double noise_std);
/// Wraps a policy; `goal` is required for goal-conditioned policies.
ActionFn policy_actor(const GmmPolicy& policy, double var_scale,
                      std::optional<std::vector<double>> goal = std::nullopt);
/// Uniform dx, dy in +-max_step_size and uniform grip in [0, 1].
ActionFn random_actor(const PickPlaceEnv& env);

struct RolloutResult {
  bool success = false;
  std::size_t steps_taken = 0;
  std::vector<Transition> trajectory;
  std::vector<std::size_t> interventions;  // timesteps where the expert acted
};

/// Runs one episode. The rng is used for reset first, then by the actor.
RolloutResult rollout(const PickPlaceEnv& env, const PickPlaceTask& task, const ActionFn& actor,
                      SeededRng& rng, std::uint64_t episode_id = 0);

struct EvalResult {
  double success_rate = 0.0;
  std::vector<RolloutResult> episodes;
};

/// Episode i runs on rng.substream(i), so results do not depend on the
/// order in which episodes are executed.
EvalResult evaluate(const ActionFn& actor, const PickPlaceEnv& env, const PickPlaceTask& task,
                    std::size_t n_episodes, const SeededRng& rng);

/// Expert episodes for each (task, count) pair, concatenated in order with
/// sequential episode ids starting at `first_episode_id`. Only episodes that
/// succeed at their own task are kept; each episode gets up to `max_attempts` tries.
DatasetStore generate_dataset(const PickPlaceEnv& env,
                              const std::vector<std::pair<PickPlaceTask, std::size_t>>& plan,
                              double noise_std, SeededRng& rng, DatasetRole role,
                              std::size_t max_attempts = 20, std::uint64_t first_episode_id = 0);

/// TwoBins: n_relevant episodes to bin A (label "A"), then n_adversarial to bin B (label "B").
DatasetStore generate_dataset(const PickPlaceEnv& env, std::size_t n_relevant,
                              std::size_t n_adversarial, double noise_std, SeededRng& rng,
                              DatasetRole role = DatasetRole::prior);

/// Expert transitions recorded during interventions. Each maximal run of
/// consecutive intervened steps is kept as its own segment.
class InterventionBuffer {
 public:
  InterventionBuffer(Manifest manifest, std::string label)
      : manifest_(manifest), label_(std::move(label)) {}

  void add_segment(std::vector<Transition> segment);
  std::size_t total() const { return total_; }

  /// The most recent `window` intervention transitions as a task store, one
  /// episode per segment, renumbered from 0 with t restarting at 0.
  DatasetStore recent(std::size_t window) const;

 private:
  Manifest manifest_;
  std::string label_;
  std::deque<std::vector<Transition>> segments_;
  std::size_t total_ = 0;
};

struct InterventionRound {
  std::vector<RolloutResult> rollouts;
  std::size_t n_interventions = 0;
  std::size_t n_steps = 0;
  DatasetStore task;  // the updated task set
};

/// HG-DAgger style collection. At every step both actors are queried; when
/// ||a_policy - a_expert||_2 > epsilon the expert action is executed and the
/// (state, expert action) pair is recorded, otherwise the policy acts.
/// Episode i uses rng.substream(i). Returns the last `window` interventions
/// accumulated in `buffer` as the new task set.
InterventionRound run_intervention_round(const ActionFn& expert, const ActionFn& policy,
                                         const PickPlaceEnv& env, const PickPlaceTask& task,
                                         double epsilon, std::size_t window,
                                         std::size_t n_episodes, const SeededRng& rng,
                                         InterventionBuffer& buffer);

}  // namespace bret
