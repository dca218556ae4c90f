#include "bret/env/rollout.hpp"

#include <cmath>
#include <string>

#include "bret/error.hpp"

namespace bret {

ActionFn expert_actor(const PickPlaceEnv& env, PickPlaceTask task, double noise_std) {
  return [&env, task, noise_std](const EnvState& s, SeededRng& rng) {
    return scripted_expert(env, s, task, noise_std, rng);
  };
}

ActionFn policy_actor(const GmmPolicy& policy, double var_scale,
                      std::optional<std::vector<double>> goal) {
  if (policy.goal_conditioned && !goal) throw std::invalid_argument("policy_actor: goal required");
  return [&policy, var_scale, goal = std::move(goal)](const EnvState& s, SeededRng& rng) {
    if (goal) return sample_action(policy, s.obs, rng, var_scale, std::span<const double>(*goal));
    return sample_action(policy, s.obs, rng, var_scale);
  };
}

ActionFn random_actor(const PickPlaceEnv& env) {
  return [&env](const EnvState&, SeededRng& rng) {
    const double m = env.config().max_step_size;
    std::vector<double> a{rng.uniform(-m, m), rng.uniform(-m, m), rng.uniform()};
    for (std::size_t j = 0; env.num_objects() > 1 && j < env.num_objects(); ++j) a.push_back(rng.uniform());
    return a;
  };
}

RolloutResult rollout(const PickPlaceEnv& env, const PickPlaceTask& task, const ActionFn& actor,
                      SeededRng& rng, std::uint64_t episode_id) {
  RolloutResult r;
  EnvState s = env.reset(rng);
  while (!s.done) {
    auto a = actor(s, rng);
    EnvState next = env.step(s, a);
    r.trajectory.push_back({episode_id, s.steps, s.obs, std::move(a), std::nullopt});
    s = std::move(next);
  }
  r.steps_taken = s.steps;
  r.success = env.success(s, task);
  return r;
}

EvalResult evaluate(const ActionFn& actor, const PickPlaceEnv& env, const PickPlaceTask& task,
                    std::size_t n_episodes, const SeededRng& rng) {
  EvalResult out;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < n_episodes; ++i) {
    SeededRng episode_rng = rng.substream(static_cast<std::uint64_t>(i));
    out.episodes.push_back(rollout(env, task, actor, episode_rng, i));
    wins += out.episodes.back().success;
  }
  out.success_rate = n_episodes == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(n_episodes);
  return out;
}

DatasetStore generate_dataset(const PickPlaceEnv& env,
                              const std::vector<std::pair<PickPlaceTask, std::size_t>>& plan,
                              double noise_std, SeededRng& rng, DatasetRole role,
                              std::size_t max_attempts, std::uint64_t first_episode_id) {
  if (noise_std < 0.0) throw std::invalid_argument("generate_dataset: negative noise");
  DatasetStore store(Manifest{1, env.state_dim(), env.action_dim()}, role);
  std::uint64_t id = first_episode_id;
  for (const auto& [task, count] : plan) {
    const std::string label = env.task_label(task);
    const ActionFn expert = expert_actor(env, task, noise_std);
    for (std::size_t n = 0; n < count; ++n) {
      bool kept = false;
      for (std::size_t attempt = 0; attempt < max_attempts && !kept; ++attempt) {
        RolloutResult r = rollout(env, task, expert, rng, id);
        if (!r.success) continue;
        for (auto& tr : r.trajectory) tr.task_label = label;
        store.append_episode(std::move(r.trajectory));
        kept = true;
      }
      if (!kept) {
        throw DataError("generate_dataset: retry budget exhausted for task " + label + " after " +
                        std::to_string(max_attempts) + " attempts");
      }
      ++id;
    }
  }
  return store;
}

DatasetStore generate_dataset(const PickPlaceEnv& env, std::size_t n_relevant,
                              std::size_t n_adversarial, double noise_std, SeededRng& rng,
                              DatasetRole role) {
  return generate_dataset(env, {{TwoBinsEnv::target(), n_relevant}, {TwoBinsEnv::adversarial(), n_adversarial}},
                          noise_std, rng, role);
}

void InterventionBuffer::add_segment(std::vector<Transition> segment) {
  if (segment.empty()) return;
  total_ += segment.size();
  segments_.push_back(std::move(segment));
}

DatasetStore InterventionBuffer::recent(std::size_t window) const {
  // Walk backwards to find where the last `window` transitions begin.
  std::size_t remaining = window;
  std::size_t first_seg = segments_.size();
  std::size_t skip_in_first = 0;
  while (first_seg > 0 && remaining > 0) {
    const std::size_t len = segments_[first_seg - 1].size();
    --first_seg;
    if (len >= remaining) {
      skip_in_first = len - remaining;
      remaining = 0;
    } else {
      remaining -= len;
    }
  }
  DatasetStore out(manifest_, DatasetRole::task);
  std::uint64_t id = 0;
  for (std::size_t s = first_seg; s < segments_.size(); ++s) {
    std::vector<Transition> ep;
    const auto& seg = segments_[s];
    for (std::size_t i = (s == first_seg ? skip_in_first : 0); i < seg.size(); ++i) {
      Transition tr = seg[i];
      tr.episode_id = id;
      tr.t = ep.size();
      tr.task_label = label_;
      ep.push_back(std::move(tr));
    }
    if (!ep.empty()) {
      out.append_episode(std::move(ep));
      ++id;
    }
  }
  return out;
}

InterventionRound run_intervention_round(const ActionFn& expert, const ActionFn& policy,
                                         const PickPlaceEnv& env, const PickPlaceTask& task,
                                         double epsilon, std::size_t window,
                                         std::size_t n_episodes, const SeededRng& rng,
                                         InterventionBuffer& buffer) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("intervention epsilon must be non-negative");
  InterventionRound round;
  for (std::size_t i = 0; i < n_episodes; ++i) {
    SeededRng ep_rng = rng.substream(static_cast<std::uint64_t>(i));
    SeededRng expert_rng = ep_rng.substream("expert");
    RolloutResult r;
    EnvState s = env.reset(ep_rng);
    std::vector<Transition> segment;
    while (!s.done) {
      auto a_expert = expert(s, expert_rng);
      auto a_policy = policy(s, ep_rng);
      double d2 = 0.0;
      for (std::size_t k = 0; k < a_expert.size(); ++k) {
        const double d = a_policy[k] - a_expert[k];
        d2 += d * d;
      }
      const bool intervene = std::sqrt(d2) > epsilon;
      auto& a = intervene ? a_expert : a_policy;
      EnvState next = env.step(s, a);
      if (intervene) {
        r.interventions.push_back(s.steps);
        segment.push_back({0, 0, s.obs, a, std::nullopt});
      } else if (!segment.empty()) {
        buffer.add_segment(std::move(segment));
        segment.clear();
      }
      r.trajectory.push_back({i, s.steps, s.obs, a, std::nullopt});
      s = std::move(next);
    }
    buffer.add_segment(std::move(segment));
    r.steps_taken = s.steps;
    r.success = env.success(s, task);
    round.n_interventions += r.interventions.size();
    round.n_steps += r.steps_taken;
    round.rollouts.push_back(std::move(r));
  }
  round.task = buffer.recent(window);
  return round;
}

}  // namespace bret
