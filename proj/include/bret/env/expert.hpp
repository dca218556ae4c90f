#pragma once

#include <vector>

#include "bret/env/pick_place.hpp"

namespace bret {

/// Distance to the bin centre at which the scripted expert lets go. The grip
/// command ramps linearly from 1 at twice this distance.
inline constexpr double kExpertReleaseTolerance = 0.05;
/// Proportional gain on the remaining offset; moves saturate at max_step_size.
inline constexpr double kExpertGain = 0.5;

/// Hand-coded pick-place controller: approach the object with the gripper
/// open, close it as the object comes within grasp radius, carry to the bin,
/// open it on arrival. The grip command ramps rather than switching: on approach
/// it rises from 0 at 1.6 grasp radii to 1 at 0.6, crossing 0.5 just outside the
/// radius. Moves are proportional to the remaining offset, so the expert
/// slows down near the object and the bin. Gaussian noise of `noise_std` is added to dx and dy only.
std::vector<double> scripted_expert(const PickPlaceEnv& env, const EnvState& state,
                                    const PickPlaceTask& task, double noise_std, SeededRng& rng);

}  // namespace bret
