#include "bret/policy/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bret/error.hpp"

namespace bret {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("gmm: non-finite ") + what);
  }
}

// log w_k + log N(a; mu_k, sigma_k) per component.
std::vector<double> component_log_likelihoods(const GmmParams& p, std::span<const double> a) {
  std::vector<double> lp(p.modes);
  for (std::size_t k = 0; k < p.modes; ++k) {
    double s = std::log(p.weights[k]);
    for (std::size_t d = 0; d < p.action_dim; ++d) {
      const double sd = p.stddev(k, d);
      const double u = (a[d] - p.mean(k, d)) / sd;
      s += -0.5 * u * u - std::log(sd) - kHalfLog2Pi;
    }
    lp[k] = s;
  }
  return lp;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

GmmParams gmm_from_raw(std::span<const double> raw, std::size_t modes, std::size_t action_dim,
                       double sigma_floor) {
  if (modes == 0 || action_dim == 0) throw std::invalid_argument("gmm: empty mixture");
  require_dim(raw.size(), gmm_raw_width(modes, action_dim), "gmm raw outputs");
  GmmParams p;
  p.modes = modes;
  p.action_dim = action_dim;
  const std::span<const double> logits = raw.subspan(0, modes);
  const double m = *std::max_element(logits.begin(), logits.end());
  p.weights.resize(modes);
  double z = 0.0;
  for (std::size_t k = 0; k < modes; ++k) z += p.weights[k] = std::exp(logits[k] - m);
  for (double& w : p.weights) w /= z;
  const std::size_t n = modes * action_dim;
  p.means.assign(raw.begin() + modes, raw.begin() + modes + n);
  p.stds.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.stds[i] = softplus(raw[modes + n + i]) + sigma_floor;
  return p;
}

double gmm_nll(const GmmParams& params, std::span<const double> action) {
  require_dim(action.size(), params.action_dim, "gmm action");
  check_finite(action, "action");
  check_finite(params.means, "means");
  check_finite(params.stds, "stds");
  const auto lp = component_log_likelihoods(params, action);
  return -log_sum_exp(lp);
}

GmmNllResult gmm_nll_raw(std::span<const double> raw, std::size_t modes, std::size_t action_dim,
                         double sigma_floor, std::span<const double> action) {
  check_finite(raw, "raw outputs");
  require_dim(action.size(), action_dim, "gmm action");
  check_finite(action, "action");
  const GmmParams p = gmm_from_raw(raw, modes, action_dim, sigma_floor);
  const auto lp = component_log_likelihoods(p, action);
  const double lse = log_sum_exp(lp);

  GmmNllResult r;
  r.nll = -lse;
  r.grad_raw.assign(raw.size(), 0.0);
  const std::size_t n = modes * action_dim;
  for (std::size_t k = 0; k < modes; ++k) {
    const double resp = std::exp(lp[k] - lse);  // posterior responsibility
    r.grad_raw[k] = p.weights[k] - resp;
    for (std::size_t d = 0; d < action_dim; ++d) {
      const std::size_t i = k * action_dim + d;
      const double sd = p.stds[i];
      const double diff = action[d] - p.means[i];
      r.grad_raw[modes + i] = -resp * diff / (sd * sd);
      const double dsd = resp * (1.0 / sd - diff * diff / (sd * sd * sd));
      r.grad_raw[modes + n + i] = dsd * sigmoid(raw[modes + n + i]);
    }
  }
  return r;
}

}  // namespace bret
