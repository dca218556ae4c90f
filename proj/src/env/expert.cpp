#include "bret/env/expert.hpp"

#include <algorithm>
#include <cmath>

namespace bret {
namespace {

Vec2 clip_toward(Vec2 from, Vec2 to, double max_step) {
  Vec2 d{kExpertGain * (to.x - from.x), kExpertGain * (to.y - from.y)};
  const double n = std::hypot(d.x, d.y);
  if (n > max_step) {
    d.x *= max_step / n;
    d.y *= max_step / n;
  }
  return d;
}

}  // namespace

std::vector<double> scripted_expert(const PickPlaceEnv& env, const EnvState& state,
                                    const PickPlaceTask& task, double noise_std, SeededRng& rng) {
  const auto& cfg = env.config();
  const Vec2 agent = PickPlaceEnv::agent(state.obs);
  const auto holding = env.held_object(state.obs);

  Vec2 move{0.0, 0.0};
  double grip = 0.0;
  if (holding && *holding != task.object) {
    // Wrong object in hand: drop it where we are.
  } else if (!holding) {
    const Vec2 obj = env.object(state.obs, task.object);
    move = clip_toward(agent, obj, cfg.max_step_size);
    grip = std::clamp(1.6 - distance(agent, obj) / cfg.grasp_radius, 0.0, 1.0);
  } else {
    // Grip eases off over the last stretch and drops through 0.5 at the
    // release tolerance.
    const Vec2 target = env.bin(task.bin);
    move = clip_toward(agent, target, cfg.max_step_size);
    grip = std::min(1.0, distance(agent, target) / (2.0 * kExpertReleaseTolerance));
  }
  if (noise_std > 0.0) {
    move.x += noise_std * rng.normal();
    move.y += noise_std * rng.normal();
  }

  std::vector<double> action{move.x, move.y, grip};
  if (env.num_objects() > 1) {
    for (std::size_t j = 0; j < env.num_objects(); ++j) action.push_back(j == task.object ? 1.0 : 0.0);
  }
  return action;
}

}  // namespace bret
