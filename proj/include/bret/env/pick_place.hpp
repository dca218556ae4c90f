#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bret/nn/rng.hpp"

namespace bret {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Region {
  Vec2 lo;
  Vec2 hi;
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  Vec2 center() const { return {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2}; }
};

/// Point-mass pick-and-place on the unit square with two bins.
///
/// Observation layout for M objects:
///   [agent_x, agent_y, obj_0_x, obj_0_y, ..., obj_{M-1}_y, held_0, ..., held_{M-1}]
/// Action layout: [dx, dy, grip] for M == 1, [dx, dy, grip, select_0..select_{M-1}]
/// otherwise. The observation is the full Markov state.
struct PickPlaceConfig {
  std::size_t num_objects = 1;
  Vec2 bin_a{0.10, 0.50};
  Vec2 bin_b{0.90, 0.50};
  double grasp_radius = 0.05;
  double success_radius = 0.08;
  double max_step_size = 0.05;
  std::size_t max_steps = 60;
  Region agent_region{{0.40, 0.05}, {0.60, 0.15}};
  /// Objects are spread over M equal-width columns of this region.
  Region object_region{{0.40, 0.30}, {0.60, 0.50}};
};

/// Carry object `object` to bin `bin` (0 = A, 1 = B).
struct PickPlaceTask {
  std::size_t object = 0;
  std::size_t bin = 0;
};

struct EnvState {
  std::vector<double> obs;
  std::size_t steps = 0;
  bool done = false;
  /// Set when an object was released inside a bin, which ends the episode.
  std::optional<std::size_t> placed_object;
  std::optional<std::size_t> placed_bin;
};

class PickPlaceEnv {
 public:
  explicit PickPlaceEnv(PickPlaceConfig config);

  const PickPlaceConfig& config() const { return config_; }
  std::size_t num_objects() const { return config_.num_objects; }
  std::size_t state_dim() const { return 2 + 3 * config_.num_objects; }
  std::size_t action_dim() const { return config_.num_objects == 1 ? 3 : 3 + config_.num_objects; }

  EnvState reset(SeededRng& rng) const;
  /// Pure transition function. Throws on a non-finite or wrongly sized action.
  EnvState step(const EnvState& state, std::span<const double> action) const;

  bool success(const EnvState& state, const PickPlaceTask& task) const;
  std::vector<PickPlaceTask> tasks() const;
  std::string task_label(const PickPlaceTask& task) const;

  Vec2 bin(std::size_t b) const { return b == 0 ? config_.bin_a : config_.bin_b; }
  Region object_slot(std::size_t j) const;

  static Vec2 agent(std::span<const double> obs) { return {obs[0], obs[1]}; }
  Vec2 object(std::span<const double> obs, std::size_t j) const { return {obs[2 + 2 * j], obs[3 + 2 * j]}; }
  bool held(std::span<const double> obs, std::size_t j) const;
  std::optional<std::size_t> held_object(std::span<const double> obs) const;

 private:
  PickPlaceConfig config_;
};

/// One object, bins A (target) and B (adversarial). Labels "A" and "B".
class TwoBinsEnv : public PickPlaceEnv {
 public:
  TwoBinsEnv() : TwoBinsEnv(PickPlaceConfig{}) {}
  explicit TwoBinsEnv(PickPlaceConfig config);
  static PickPlaceTask target() { return {0, 0}; }
  static PickPlaceTask adversarial() { return {0, 1}; }
};

/// M objects (default 4) x 2 bins = 2M pick-place tasks, one per episode.
class MultiTaskEnv : public PickPlaceEnv {
 public:
  MultiTaskEnv() : MultiTaskEnv(default_config()) {}
  explicit MultiTaskEnv(PickPlaceConfig config);
  static PickPlaceConfig default_config();
};

double distance(Vec2 a, Vec2 b);

}  // namespace bret
