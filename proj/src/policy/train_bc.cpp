#include <cmath>
#include <string>

#include "bret/error.hpp"
#include "bret/policy/gmm_policy.hpp"

namespace bret {
namespace {

// Store contents pre-normalized into policy inputs and targets.
struct Samples {
  std::vector<std::vector<double>> input;
  std::vector<std::vector<double>> target;
  std::size_t size() const { return input.size(); }
};

Samples prepare(const GmmPolicy& policy, const DatasetStore& store) {
  Samples s;
  s.input.reserve(store.size());
  s.target.reserve(store.size());
  for (std::size_t e = 0; e < store.num_episodes(); ++e) {
    const auto ep = store.episode(e);
    const auto goal = policy.norm.normalize_state(ep.back().state);
    for (const Transition& tr : ep) {
      auto x = policy.norm.normalize_state(tr.state);
      if (policy.goal_conditioned) x.insert(x.end(), goal.begin(), goal.end());
      s.input.push_back(std::move(x));
      s.target.push_back(policy.norm.normalize_action(tr.action));
    }
  }
  return s;
}

struct Workspace {
  MlpTape trunk, head;
  std::vector<double> hidden, g_hidden;
};

// Adds scale * d nll / d params for one sample; returns the nll.
double accumulate(const GmmPolicy& p, const std::vector<double>& x, const std::vector<double>& a,
                  double scale, Workspace& w, std::vector<double>& g_trunk,
                  std::vector<double>& g_head) {
  mlp_forward(p.trunk.spec, p.trunk.params, x, w.trunk);
  w.hidden = w.trunk.output();
  for (double& v : w.hidden) v = v > 0.0 ? v : 0.0;
  mlp_forward(p.head.spec, p.head.params, w.hidden, w.head);
  GmmNllResult r = gmm_nll_raw(w.head.output(), p.modes, p.action_dim, p.sigma_floor, a);
  for (double& g : r.grad_raw) g *= scale;
  mlp_backward(p.head.spec, p.head.params, w.head, r.grad_raw, g_head, &w.g_hidden);
  const auto& pre = w.trunk.output();
  for (std::size_t i = 0; i < w.g_hidden.size(); ++i) {
    if (!(pre[i] > 0.0)) w.g_hidden[i] = 0.0;
  }
  mlp_backward(p.trunk.spec, p.trunk.params, w.trunk, w.g_hidden, g_trunk);
  return r.nll;
}

}  // namespace

BcResult train_bc(GmmPolicy policy, const DatasetStore& task, const DatasetStore& retrieved,
                  const BcConfig& config, SeededRng& rng) {
  if (task.empty()) throw DataError("train_bc: empty task store");
  if (config.steps > 0 && config.batch == 0) throw std::invalid_argument("train_bc: batch must be positive");
  require_dim(task.state_dim(), policy.state_dim, "task state");
  require_dim(task.action_dim(), policy.action_dim, "task action");
  if (!retrieved.empty()) {
    require_dim(retrieved.state_dim(), policy.state_dim, "retrieved state");
    require_dim(retrieved.action_dim(), policy.action_dim, "retrieved action");
  }

  const Samples task_s = prepare(policy, task);
  const Samples ret_s = prepare(policy, retrieved);

  AdamState opt_trunk(policy.trunk.params.size(), config.adam);
  AdamState opt_head(policy.head.params.size(), config.adam);
  std::vector<double> g_trunk(policy.trunk.params.size()), g_head(policy.head.params.size());
  std::vector<std::size_t> idx_task(config.batch), idx_ret(config.batch);
  Workspace w;

  BcResult out;
  out.loss_trace.reserve(config.steps);
  out.batch_composition.reserve(config.steps);
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(config.batch, 1));
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& i : idx_task) i = rng.index(task_s.size());
    if (ret_s.size() > 0) {
      for (auto& i : idx_ret) i = rng.index(ret_s.size());
    }
    std::fill(g_trunk.begin(), g_trunk.end(), 0.0);
    std::fill(g_head.begin(), g_head.end(), 0.0);

    double task_loss = 0.0, ret_loss = 0.0;
    for (std::size_t i : idx_task) {
      task_loss += accumulate(policy, task_s.input[i], task_s.target[i], scale, w, g_trunk, g_head);
    }
    std::uint32_t n_ret = 0;
    if (ret_s.size() > 0) {
      for (std::size_t i : idx_ret) {
        ret_loss += accumulate(policy, ret_s.input[i], ret_s.target[i], scale, w, g_trunk, g_head);
      }
      n_ret = static_cast<std::uint32_t>(config.batch);
    }
    const double loss = (task_loss + ret_loss) * scale;
    if (!std::isfinite(loss)) {
      throw NumericError("train_bc: non-finite loss at step " + std::to_string(step));
    }
    out.loss_trace.push_back(loss);
    out.batch_composition.push_back({static_cast<std::uint32_t>(config.batch), n_ret});
    adam_step(opt_trunk, policy.trunk.params, g_trunk);
    adam_step(opt_head, policy.head.params, g_head);
  }
  out.policy = std::move(policy);
  return out;
}

}  // namespace bret
