#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bret/error.hpp"
#include "bret/policy/gmm.hpp"
#include "bret/policy/gmm_policy.hpp"
#include "gradcheck.hpp"

using namespace bret;

namespace {

NormStats unit_norm(std::size_t ds, std::size_t da) {
  NormStats n;
  n.state_mean.assign(ds, 0.0);
  n.state_std.assign(ds, 1.0);
  n.action_mean.assign(da, 0.0);
  n.action_std.assign(da, 1.0);
  return n;
}

GmmParams make_params(std::vector<double> w, std::vector<double> mu, std::vector<double> sd, std::size_t da) {
  GmmParams p;
  p.modes = w.size();
  p.action_dim = da;
  p.weights = std::move(w);
  p.means = std::move(mu);
  p.stds = std::move(sd);
  return p;
}

// Direct mixture density without log-sum-exp, fine for moderate values.
double naive_nll(const GmmParams& p, const std::vector<double>& a) {
  double lik = 0;
  for (std::size_t k = 0; k < p.modes; ++k) {
    double c = p.weights[k];
    for (std::size_t d = 0; d < p.action_dim; ++d) {
      const double z = (a[d] - p.mean(k, d)) / p.stddev(k, d);
      c *= std::exp(-0.5 * z * z) / (p.stddev(k, d) * std::sqrt(2 * std::numbers::pi));
    }
    lik += c;
  }
  return -std::log(lik);
}

DatasetStore line_store(std::size_t episodes, std::size_t len, std::uint64_t seed,
                        DatasetRole role = DatasetRole::task) {
  SeededRng rng(seed);
  DatasetStore s(Manifest{1, 3, 2}, role);
  for (std::uint64_t e = 0; e < episodes; ++e) {
    std::vector<Transition> ep;
    for (std::uint64_t t = 0; t < len; ++t) {
      const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
      ep.push_back({e, t, {x, y, double(e)}, {0.5 * x - y, 0.3 * y + 0.1}, std::nullopt});
    }
    s.append_episode(ep);
  }
  return s;
}

GmmPolicy small_policy(std::uint64_t seed, std::size_t modes = 3, bool goal = false) {
  SeededRng rng(seed);
  PolicyConfig cfg;
  cfg.modes = modes;
  cfg.hidden = {16, 16};
  cfg.goal_conditioned = goal;
  return init_policy(cfg, 3, 2, unit_norm(3, 2), rng);
}

}  // namespace

TEST_CASE("single unit Gaussian at its mean") {
  const auto p = make_params({1.0}, {0.7}, {1.0}, 1);
  CHECK(gmm_nll(p, std::vector<double>{0.7}) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi)));
  CHECK(gmm_nll(p, std::vector<double>{0.7}) == doctest::Approx(0.918939).epsilon(1e-6));
}

TEST_CASE("nll agrees with the direct density and obeys mixture identities") {
  SeededRng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 1 + rng.index(5), D = 1 + rng.index(3);
    std::vector<double> raw(gmm_raw_width(K, D));
    for (double& r : raw) r = rng.uniform(-1, 1);
    const auto p = gmm_from_raw(raw, K, D, 1e-4);
    std::vector<double> a(D);
    for (double& x : a) x = rng.uniform(-1, 1);
    const double nll = gmm_nll(p, a);
    CHECK(nll == doctest::Approx(naive_nll(p, a)).epsilon(1e-10));

    double wsum = 0;
    for (double w : p.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(std::abs(wsum - 1.0) <= 1e-12);
    for (double s : p.stds) CHECK(s >= 1e-4);

    // Each component alone bounds the mixture.
    for (std::size_t k = 0; k < K; ++k) {
      const auto single = make_params({1.0}, {p.means.begin() + k * D, p.means.begin() + (k + 1) * D},
                                      {p.stds.begin() + k * D, p.stds.begin() + (k + 1) * D}, D);
      CHECK(nll <= gmm_nll(single, a) - std::log(p.weights[k]) + 1e-12);
    }

    // Reversing component order.
    GmmParams rev = p;
    for (std::size_t k = 0; k < K; ++k) {
      rev.weights[k] = p.weights[K - 1 - k];
      for (std::size_t d = 0; d < D; ++d) {
        rev.means[k * D + d] = p.mean(K - 1 - k, d);
        rev.stds[k * D + d] = p.stddev(K - 1 - k, d);
      }
    }
    CHECK(gmm_nll(rev, a) == doctest::Approx(nll).epsilon(1e-12));

    // Splitting component 0 into two halves.
    GmmParams dup = p;
    dup.modes = K + 1;
    dup.weights[0] *= 0.5;
    dup.weights.push_back(dup.weights[0]);
    for (std::size_t d = 0; d < D; ++d) {
      dup.means.push_back(p.mean(0, d));
      dup.stds.push_back(p.stddev(0, d));
    }
    CHECK(gmm_nll(dup, a) == doctest::Approx(nll).epsilon(1e-12));
  }
}

TEST_CASE("nll stays finite far from every mode") {
  const auto p = make_params({0.5, 0.5}, {0.0, 1.0}, {1e-3, 1e-3}, 1);
  const double v = gmm_nll(p, std::vector<double>{50.0});
  CHECK(std::isfinite(v));
  CHECK(v > 1e8);
  CHECK_THROWS(gmm_nll(p, std::vector<double>{std::nan("")}));
  CHECK_THROWS_AS(gmm_nll(p, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST_CASE("raw-output gradients match finite differences") {
  SeededRng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t K = 1 + rng.index(5), D = 1 + rng.index(3);
    std::vector<double> raw(gmm_raw_width(K, D));
    for (double& r : raw) r = rng.uniform(-1.5, 1.5);
    std::vector<double> a(D);
    for (double& x : a) x = rng.uniform(-1, 1);
    const auto r = gmm_nll_raw(raw, K, D, 1e-4, a);
    CHECK(r.nll == doctest::Approx(gmm_nll(gmm_from_raw(raw, K, D, 1e-4), a)).epsilon(1e-12));
    const double worst = testing::worst_fd_error(
        [&](const std::vector<double>& x) { return gmm_nll_raw(x, K, D, 1e-4, a).nll; }, raw, r.grad_raw);
    CHECK(worst <= testing::kFdRelTol);
  }
}

TEST_CASE("zero head gives uniform weights") {
  auto pol = small_policy(1, 5);
  std::fill(pol.head.params.begin(), pol.head.params.end(), 0.0);
  const auto g = policy_forward(pol, std::vector<double>{0.2, -0.4, 1.0});
  for (double w : g.weights) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("policy_forward is deterministic and checks its inputs") {
  const auto pol = small_policy(2);
  const std::vector<double> s{0.1, 0.2, 0.3};
  const auto a = policy_forward(pol, s), b = policy_forward(pol, s);
  CHECK(a.weights == b.weights);
  CHECK(a.means == b.means);
  CHECK_THROWS_AS(policy_forward(pol, std::vector<double>{1.0}), DimensionError);
  const std::vector<double> goal{0, 0, 0};
  CHECK_THROWS(policy_forward(pol, s, std::span<const double>(goal)));
  const auto gpol = small_policy(2, 3, true);
  CHECK_THROWS(policy_forward(gpol, s));
  CHECK(policy_forward(gpol, s, std::span<const double>(goal)).modes == 3);
}

TEST_CASE("greedy sampling returns the heaviest mode mean in raw units") {
  auto pol = small_policy(3, 3);
  pol.norm.action_mean = {1.0, -1.0};
  pol.norm.action_std = {2.0, 0.5};
  const std::vector<double> s{0.4, -0.1, 0.0};
  const auto g = policy_forward(pol, s);
  const std::size_t k = std::max_element(g.weights.begin(), g.weights.end()) - g.weights.begin();
  SeededRng rng(1);
  const auto before = rng;
  const auto a = sample_action(pol, s, rng, 0.0);
  CHECK(a[0] == doctest::Approx(1.0 + 2.0 * g.mean(k, 0)));
  CHECK(a[1] == doctest::Approx(-1.0 + 0.5 * g.mean(k, 1)));
  CHECK(a == sample_action(pol, s, rng, 0.0));
  SeededRng untouched = before;
  CHECK(rng.next_u64() == untouched.next_u64());
}

TEST_CASE("single-mode samples center on the mean") {
  const auto pol = small_policy(4, 1);
  const std::vector<double> s{0.3, 0.3, 0.3};
  const auto g = policy_forward(pol, s);
  SeededRng rng(9);
  const int n = 10000;
  double sum0 = 0, sum1 = 0;
  for (int i = 0; i < n; ++i) {
    const auto a = sample_action(pol, s, rng, 1.0);
    sum0 += a[0];
    sum1 += a[1];
  }
  CHECK(std::abs(sum0 / n - g.mean(0, 0)) <= 3.0 * g.stddev(0, 0) / std::sqrt(double(n)));
  CHECK(std::abs(sum1 / n - g.mean(0, 1)) <= 3.0 * g.stddev(0, 1) / std::sqrt(double(n)));
}

TEST_CASE("make_goal") {
  const auto one = line_store(1, 5, 1);
  const auto norm = unit_norm(3, 2);
  SeededRng rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto g = make_goal(one, norm, rng);
    CHECK(g.size() == 3);
    CHECK(g == one[4].state);
  }
  const auto four = line_store(4, 3, 2);
  std::array<int, 4> hits{};
  for (int i = 0; i < 1000; ++i) hits[std::size_t(make_goal(four, norm, rng)[2])] += 1;
  for (int h : hits) CHECK(std::abs(h / 1000.0 - 0.25) <= 0.05);
  CHECK_THROWS(make_goal(DatasetStore(Manifest{1, 3, 2}, DatasetRole::task), norm, rng));
}

TEST_CASE("train_bc balanced batches and task-only fallback") {
  const auto task = line_store(2, 10, 1);
  const auto ret = line_store(3, 10, 2, DatasetRole::retrieved);
  const DatasetStore empty(Manifest{1, 3, 2}, DatasetRole::retrieved);
  BcConfig cfg;
  cfg.steps = 50;
  cfg.batch = 8;

  SeededRng r1(4), r2(4);
  const auto a = train_bc(small_policy(7), task, empty, cfg, r1);
  const auto b = train_bc(small_policy(7), task, empty, cfg, r2);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.policy.head.params == b.policy.head.params);
  for (const auto& c : a.batch_composition) CHECK((c[0] == 8 && c[1] == 0));

  SeededRng r3(4);
  const auto mixed = train_bc(small_policy(7), task, ret, cfg, r3);
  REQUIRE(mixed.batch_composition.size() == 50);
  for (const auto& c : mixed.batch_composition) CHECK((c[0] == 8 && c[1] == 8));

  // Replaying the first step's draws reproduces its loss.
  const auto init = small_policy(7);
  SeededRng replay(4);
  double task_mean = 0, ret_mean = 0;
  for (int i = 0; i < 8; ++i) {
    const auto& tr = task[replay.index(task.size())];
    task_mean += gmm_nll(policy_forward(init, tr.state), init.norm.normalize_action(tr.action)) / 8;
  }
  for (int i = 0; i < 8; ++i) {
    const auto& tr = ret[replay.index(ret.size())];
    ret_mean += gmm_nll(policy_forward(init, tr.state), init.norm.normalize_action(tr.action)) / 8;
  }
  CHECK(mixed.loss_trace[0] == doctest::Approx(task_mean + ret_mean).epsilon(1e-10));

  CHECK_THROWS(train_bc(small_policy(7), DatasetStore(Manifest{1, 3, 2}, DatasetRole::task), ret, cfg, r3));
}

TEST_CASE("overfitting a small task set drops the nll by more than a nat") {
  const auto task = line_store(2, 10, 3);
  REQUIRE(task.size() == 20);
  const auto pol = small_policy(8);
  const double before = mean_nll(pol, task);
  BcConfig cfg;
  cfg.steps = 2000;
  cfg.batch = 20;
  SeededRng rng(1);
  const auto out = train_bc(pol, task, DatasetStore(task.manifest(), DatasetRole::retrieved), cfg, rng);
  CHECK(mean_nll(out.policy, task) < before - 1.0);
}

TEST_CASE("goal-conditioned training runs and stays finite") {
  const auto task = line_store(3, 6, 5);
  BcConfig cfg;
  cfg.steps = 100;
  cfg.batch = 4;
  SeededRng rng(2);
  const auto out = train_bc(small_policy(9, 3, true), task, DatasetStore(task.manifest(), DatasetRole::retrieved),
                            cfg, rng);
  CHECK(std::isfinite(out.loss_trace.back()));
  CHECK(std::isfinite(mean_nll(out.policy, task)));
}
