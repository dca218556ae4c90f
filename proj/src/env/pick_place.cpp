#include "bret/env/pick_place.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bret/error.hpp"

namespace bret {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

PickPlaceEnv::PickPlaceEnv(PickPlaceConfig config) : config_(config) {
  if (config_.num_objects == 0) throw std::invalid_argument("pick-place: need at least one object");
  if (!(config_.grasp_radius > 0 && config_.success_radius > 0 && config_.max_step_size > 0)) {
    throw std::invalid_argument("pick-place: radii and step size must be positive");
  }
  if (config_.max_steps == 0) throw std::invalid_argument("pick-place: max_steps must be positive");
}

Region PickPlaceEnv::object_slot(std::size_t j) const {
  const Region& r = config_.object_region;
  const double w = (r.hi.x - r.lo.x) / static_cast<double>(config_.num_objects);
  if (config_.num_objects == 1) return r;
  // Inner half of each column keeps objects at least w/2 apart.
  return {{r.lo.x + w * (static_cast<double>(j) + 0.25), r.lo.y},
          {r.lo.x + w * (static_cast<double>(j) + 0.75), r.hi.y}};
}

bool PickPlaceEnv::held(std::span<const double> obs, std::size_t j) const {
  return obs[2 + 2 * config_.num_objects + j] > 0.5;
}

std::optional<std::size_t> PickPlaceEnv::held_object(std::span<const double> obs) const {
  for (std::size_t j = 0; j < config_.num_objects; ++j) {
    if (held(obs, j)) return j;
  }
  return std::nullopt;
}

EnvState PickPlaceEnv::reset(SeededRng& rng) const {
  EnvState s;
  s.obs.assign(state_dim(), 0.0);
  const Region& ar = config_.agent_region;
  s.obs[0] = rng.uniform(ar.lo.x, ar.hi.x);
  s.obs[1] = rng.uniform(ar.lo.y, ar.hi.y);
  for (std::size_t j = 0; j < config_.num_objects; ++j) {
    const Region r = object_slot(j);
    s.obs[2 + 2 * j] = rng.uniform(r.lo.x, r.hi.x);
    s.obs[3 + 2 * j] = rng.uniform(r.lo.y, r.hi.y);
  }
  return s;
}

EnvState PickPlaceEnv::step(const EnvState& state, std::span<const double> action) const {
  require_dim(action.size(), action_dim(), "pick-place action");
  require_dim(state.obs.size(), state_dim(), "pick-place state");
  for (double v : action) {
    if (!std::isfinite(v)) throw std::invalid_argument("pick-place: non-finite action");
  }
  const std::size_t M = config_.num_objects;
  EnvState next = state;
  auto& o = next.obs;

  double dx = action[0], dy = action[1];
  const double norm = std::hypot(dx, dy);
  if (norm > config_.max_step_size) {
    dx *= config_.max_step_size / norm;
    dy *= config_.max_step_size / norm;
  }
  o[0] = std::clamp(o[0] + dx, 0.0, 1.0);
  o[1] = std::clamp(o[1] + dy, 0.0, 1.0);

  const Vec2 a = agent(o);
  const auto holding = held_object(o);
  if (holding) {
    o[2 + 2 * *holding] = a.x;
    o[3 + 2 * *holding] = a.y;
  }

  const bool grip = action[2] > 0.5;
  if (grip && !holding) {
    std::optional<std::size_t> pick;
    double best_sel = -std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < M; ++j) {
      const double d = distance(a, object(o, j));
      if (d > config_.grasp_radius) continue;
      const double sel = M == 1 ? 0.0 : action[3 + j];
      if (sel > best_sel || (sel == best_sel && d < best_dist)) {
        pick = j;
        best_sel = sel;
        best_dist = d;
      }
    }
    if (pick) {
      o[2 + 2 * M + *pick] = 1.0;
      o[2 + 2 * *pick] = a.x;
      o[3 + 2 * *pick] = a.y;
    }
  } else if (!grip && holding) {
    o[2 + 2 * M + *holding] = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
      if (distance(a, bin(b)) <= config_.success_radius) {
        next.placed_object = *holding;
        next.placed_bin = b;
        next.done = true;
      }
    }
  }
  next.steps += 1;
  if (next.steps >= config_.max_steps) next.done = true;
  return next;
}

bool PickPlaceEnv::success(const EnvState& state, const PickPlaceTask& task) const {
  return state.placed_object == task.object && state.placed_bin == task.bin &&
         distance(object(state.obs, task.object), bin(task.bin)) <= config_.success_radius;
}

std::vector<PickPlaceTask> PickPlaceEnv::tasks() const {
  std::vector<PickPlaceTask> out;
  for (std::size_t j = 0; j < config_.num_objects; ++j) {
    out.push_back({j, 0});
    out.push_back({j, 1});
  }
  return out;
}

std::string PickPlaceEnv::task_label(const PickPlaceTask& task) const {
  const std::string bin_name = task.bin == 0 ? "A" : "B";
  if (config_.num_objects == 1) return bin_name;
  return "obj" + std::to_string(task.object) + "-" + bin_name;
}

TwoBinsEnv::TwoBinsEnv(PickPlaceConfig config) : PickPlaceEnv([&] {
  if (config.num_objects != 1) throw std::invalid_argument("TwoBinsEnv has exactly one object");
  return config;
}()) {}

PickPlaceConfig MultiTaskEnv::default_config() {
  PickPlaceConfig c;
  c.num_objects = 4;
  c.object_region = {{0.10, 0.30}, {0.90, 0.50}};
  c.agent_region = {{0.35, 0.05}, {0.65, 0.15}};
  c.max_steps = 80;
  return c;
}

MultiTaskEnv::MultiTaskEnv(PickPlaceConfig config) : PickPlaceEnv([&] {
  if (config.num_objects < 2) throw std::invalid_argument("MultiTaskEnv needs at least two objects");
  return config;
}()) {}

}  // namespace bret
