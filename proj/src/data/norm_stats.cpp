#include "bret/data/norm_stats.hpp"

#include <algorithm>
#include <cmath>

#include "bret/error.hpp"

namespace bret {
namespace {

std::vector<double> affine(std::span<const double> x, const std::vector<double>& mean,
                           const std::vector<double>& std, bool forward, const char* what) {
  require_dim(x.size(), mean.size(), what);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = forward ? (x[i] - mean[i]) / std[i] : x[i] * std[i] + mean[i];
  }
  return out;
}

// Welford's running mean/variance, one accumulator per dimension.
struct Running {
  std::vector<double> mean, m2;
  explicit Running(std::size_t n) : mean(n, 0.0), m2(n, 0.0) {}
  void add(std::span<const double> x, double count) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / count;
      m2[i] += d * (x[i] - mean[i]);
    }
  }
  std::vector<double> stddev(double count, double floor) const {
    std::vector<double> s(m2.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::max(std::sqrt(m2[i] / count), floor);
    return s;
  }
};

}  // namespace

std::vector<double> NormStats::normalize_state(std::span<const double> s) const {
  return affine(s, state_mean, state_std, true, "state");
}
std::vector<double> NormStats::normalize_action(std::span<const double> a) const {
  return affine(a, action_mean, action_std, true, "action");
}
std::vector<double> NormStats::denormalize_state(std::span<const double> s) const {
  return affine(s, state_mean, state_std, false, "state");
}
std::vector<double> NormStats::denormalize_action(std::span<const double> a) const {
  return affine(a, action_mean, action_std, false, "action");
}

NormStats compute_norm_stats(const DatasetStore& store, double std_floor) {
  if (store.empty()) throw DataError("cannot compute normalization statistics of an empty store");
  if (!(std_floor > 0.0)) throw std::invalid_argument("std_floor must be positive");
  Running s(store.state_dim()), a(store.action_dim());
  double n = 0.0;
  for (const Transition& tr : store.transitions()) {
    n += 1.0;
    s.add(tr.state, n);
    a.add(tr.action, n);
  }
  NormStats stats;
  stats.std_floor = std_floor;
  stats.state_mean = s.mean;
  stats.state_std = s.stddev(n, std_floor);
  stats.action_mean = a.mean;
  stats.action_std = a.stddev(n, std_floor);
  return stats;
}

Transition normalize(const NormStats& stats, const Transition& x) {
  Transition out = x;
  out.state = stats.normalize_state(x.state);
  out.action = stats.normalize_action(x.action);
  return out;
}

Transition denormalize(const NormStats& stats, const Transition& x) {
  Transition out = x;
  out.state = stats.denormalize_state(x.state);
  out.action = stats.denormalize_action(x.action);
  return out;
}

}  // namespace bret
