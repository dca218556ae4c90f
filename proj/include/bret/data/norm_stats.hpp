#pragma once

#include <span>
#include <vector>

#include "bret/data/dataset.hpp"

namespace bret {

/// Per-dimension affine normalization. Computed on the prior dataset and
/// applied to every dataset so that no single raw unit dominates L2 distances.
struct NormStats {
  std::vector<double> state_mean;
  std::vector<double> state_std;
  std::vector<double> action_mean;
  std::vector<double> action_std;
  double std_floor = 1e-6;

  std::vector<double> normalize_state(std::span<const double> s) const;
  std::vector<double> normalize_action(std::span<const double> a) const;
  std::vector<double> denormalize_state(std::span<const double> s) const;
  std::vector<double> denormalize_action(std::span<const double> a) const;

  bool operator==(const NormStats&) const = default;
};

/// Mean and population standard deviation over all transitions; stds are
/// clamped from below at std_floor. Throws DataError on an empty store.
NormStats compute_norm_stats(const DatasetStore& store, double std_floor = 1e-6);

Transition normalize(const NormStats& stats, const Transition& x);
Transition denormalize(const NormStats& stats, const Transition& x);

}  // namespace bret
