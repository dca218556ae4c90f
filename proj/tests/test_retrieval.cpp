#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bret/embed/vae.hpp"
#include "bret/error.hpp"
#include "bret/retrieval/retrieval.hpp"

using namespace bret;

namespace {

DatasetStore labeled_store(std::size_t episodes, std::size_t len, std::uint64_t seed,
                           DatasetRole role = DatasetRole::prior) {
  SeededRng rng(seed);
  DatasetStore s(Manifest{1, 3, 2}, role);
  for (std::uint64_t e = 0; e < episodes; ++e) {
    std::vector<Transition> ep;
    const std::string label = e % 2 ? "B" : "A";
    for (std::uint64_t t = 0; t < len; ++t) {
      ep.push_back({e, t, {rng.uniform(-1, 1), rng.uniform(-1, 1), 0.1 * t}, {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                    label});
    }
    s.append_episode(ep);
  }
  return s;
}

EmbedderModel random_model(std::uint64_t seed) {
  SeededRng rng(seed);
  EmbedderConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden = {8, 8};
  NormStats n;
  n.state_mean = {0.1, -0.2, 0.5};
  n.state_std = {1.0, 2.0, 0.5};
  n.action_mean = {0.0, 0.3};
  n.action_std = {0.7, 1.0};
  return init_embedder(cfg, 3, 2, n, rng);
}

ScoreTable table_from(std::vector<double> raw) {
  ScoreTable t;
  t.f_plus = *std::max_element(raw.begin(), raw.end());
  t.f_minus = *std::min_element(raw.begin(), raw.end());
  t.raw = std::move(raw);
  return normalize_scores(std::move(t));
}

}  // namespace

TEST_CASE("score_prior equals a naive double loop") {
  const auto model = random_model(1);
  const auto prior = labeled_store(10, 20, 2);
  const auto task = labeled_store(3, 10, 3, DatasetRole::task);
  REQUIRE(prior.size() == 200);
  REQUIRE(task.size() == 30);
  for (std::size_t threads : {1u, 3u, 0u}) {
    const auto table = score_prior(model, prior, task, threads);
    REQUIRE(table.raw.size() == 200);
    double hi = -INFINITY, lo = INFINITY;
    for (std::size_t i = 0; i < prior.size(); ++i) {
      const auto zi = encode(model, prior[i].state, prior[i].action);
      double best = -INFINITY;
      for (std::size_t j = 0; j < task.size(); ++j)
        {
          const auto zj = encode(model, task[j].state, task[j].action);
          long double d2 = 0;
          for (std::size_t k = 0; k < zi.size(); ++k) d2 += (long double)(zi[k] - zj[k]) * (zi[k] - zj[k]);
          best = std::max(best, -double(std::sqrt(d2)));
        }
      CHECK(std::abs(table.raw[i] - best) <= 1e-9);
      hi = std::max(hi, best);
      lo = std::min(lo, best);
    }
    CHECK(std::abs(table.f_plus - hi) <= 1e-9);
    CHECK(std::abs(table.f_minus - lo) <= 1e-9);
  }
}

TEST_CASE("score_prior boundary cases") {
  const auto model = random_model(2);
  const auto prior = labeled_store(2, 5, 4);
  SUBCASE("a prior transition copied into the task scores zero and attains the max") {
    DatasetStore task(prior.manifest(), DatasetRole::task);
    std::vector<Transition> copy(prior.episode(1).begin(), prior.episode(1).end());
    copy.resize(1);
    task.append_episode(copy);
    const auto table = score_prior(model, prior, task);
    const auto idx = *prior.find(1, 0);
    CHECK(table.raw[idx] == 0.0);
    CHECK(table.f_plus == 0.0);
  }
  SUBCASE("singleton task reduces to plain similarity") {
    DatasetStore task(prior.manifest(), DatasetRole::task);
    task.append_episode({{0, 0, {0.3, 0.3, 0.3}, {0.1, -0.1}, std::nullopt}});
    const auto table = score_prior(model, prior, task);
    const auto zt = encode(model, task[0].state, task[0].action);
    for (std::size_t i = 0; i < prior.size(); ++i)
      CHECK(table.raw[i] == doctest::Approx(similarity(encode(model, prior[i].state, prior[i].action), zt)));
  }
  SUBCASE("empty stores are errors") {
    DatasetStore empty(prior.manifest(), DatasetRole::task);
    CHECK_THROWS(score_prior(model, prior, empty));
    CHECK_THROWS(score_prior(model, DatasetStore(prior.manifest(), DatasetRole::prior), prior));
  }
}

TEST_CASE("normalize_scores examples") {
  const auto t = table_from({-2.0, -1.0, -0.5});
  CHECK(t.normalized[0] == 0.0);
  CHECK(t.normalized[1] == doctest::Approx(2.0 / 3.0));
  CHECK(t.normalized[2] == 1.0);
  for (double v : table_from({-1.5, -1.5, -1.5}).normalized) CHECK(v == 1.0);
  CHECK(select(table_from({-1.5, -1.5}), 0.99).count() == 2);
}

TEST_CASE("select examples") {
  const auto t = table_from({0.0, 0.5, 1.0});
  const auto m = select(t, 0.6);
  CHECK(m.selected == std::vector<std::uint8_t>{0, 0, 1});
  CHECK(select(t, 1.0).count() == 0);
  CHECK(select(t, 0.0).selected == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(select(t, 0.5).selected == std::vector<std::uint8_t>{0, 0, 1});  // ties excluded
  CHECK_THROWS(select(t, -0.1));
  CHECK_THROWS(select(t, 1.5));
}

TEST_CASE("selection properties over random tables") {
  SeededRng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(60);
    std::vector<double> raw(n);
    for (double& r : raw) r = rng.uniform() < 0.1 ? -1.0 : -rng.uniform(0, 5);
    const auto t = table_from(raw);
    double d1 = rng.uniform(), d2 = rng.uniform();
    if (d1 > d2) std::swap(d1, d2);
    const auto m1 = select(t, d1), m2 = select(t, d2);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(t.normalized[i] >= 0.0);
      CHECK(t.normalized[i] <= 1.0);
      CHECK(bool(m1.selected[i]) == (t.normalized[i] > d1));
      if (m2.selected[i]) CHECK(m1.selected[i]);
      if (raw[i] == t.f_plus) CHECK(m2.selected[i]);
    }
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-10.0, 10.0);
    std::vector<double> moved(raw);
    for (double& r : moved) r = a * r + b;
    CHECK(select(table_from(moved), d1).selected == m1.selected);
    CHECK(select(t, 1.0).count() == 0);
  }
}

TEST_CASE("expand_context") {
  const auto prior = labeled_store(2, 6, 1);
  const auto t = table_from(std::vector<double>(12, 0.0));
  RetrievalMask m{std::vector<std::uint8_t>(12, 0), 0.5, 1};
  m.selected[*prior.find(0, 0)] = 1;
  m.selected[*prior.find(1, 4)] = 1;
  CHECK(expand_context(m, prior, 1).selected == m.selected);
  const auto e = expand_context(m, prior, 3);
  CHECK(e.count() == 1 + 3);
  CHECK(e.selected[*prior.find(1, 2)]);
  CHECK(e.selected[*prior.find(1, 3)]);
  CHECK(!e.selected[*prior.find(1, 1)]);
  CHECK(!e.selected[*prior.find(0, 1)]);
  CHECK(e.context_horizon == 3);
  CHECK(expand_context(e, prior, 3).selected == e.selected);
  RetrievalMask bad{std::vector<std::uint8_t>(5, 0), 0.5, 1};
  CHECK_THROWS(expand_context(bad, prior, 2));
  (void)t;
}

TEST_CASE("build_retrieved keeps identity and order") {
  const auto prior = labeled_store(10, 20, 7);
  RetrievalMask none{std::vector<std::uint8_t>(200, 0), 0.5, 1};
  CHECK(build_retrieved(prior, none).empty());
  RetrievalMask all{std::vector<std::uint8_t>(200, 1), 0.5, 1};
  const auto full = build_retrieved(prior, all);
  REQUIRE(full.size() == 200);
  for (std::size_t i = 0; i < 200; ++i) CHECK(full[i] == prior[i]);
  RetrievalMask some{std::vector<std::uint8_t>(200, 0), 0.5, 1};
  SeededRng rng(1);
  std::size_t picked = 0;
  while (picked < 37) {
    const auto i = rng.index(200);
    if (!some.selected[i]) {
      some.selected[i] = 1;
      ++picked;
    }
  }
  const auto r = build_retrieved(prior, some);
  CHECK(r.size() == 37);
  CHECK(r.role() == DatasetRole::retrieved);
  std::size_t k = 0;
  for (std::size_t i = 0; i < 200; ++i)
    if (some.selected[i]) CHECK(r[k++] == prior[i]);
  CHECK_THROWS(build_retrieved(prior, RetrievalMask{std::vector<std::uint8_t>(3, 1), 0.5, 1}));
}

TEST_CASE("evaluate_retrieval precision and recall") {
  const auto prior = labeled_store(10, 100, 8);
  const auto table = table_from(std::vector<double>(1000, -1.0));
  const std::set<std::string> relevant{"A"};
  RetrievalMask exact{std::vector<std::uint8_t>(1000, 0), 0.5, 1};
  for (std::size_t i = 0; i < 1000; ++i) exact.selected[i] = prior[i].task_label == "A";
  auto r = evaluate_retrieval(exact, table, prior, relevant);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.n_selected == 500);
  CHECK(r.fraction_selected == 0.5);

  RetrievalMask none{std::vector<std::uint8_t>(1000, 0), 0.5, 1};
  r = evaluate_retrieval(none, table, prior, relevant);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.0);

  SeededRng rng(3);
  RetrievalMask half{std::vector<std::uint8_t>(1000, 0), 0.5, 1};
  for (auto& s : half.selected) s = rng.uniform() < 0.5;
  r = evaluate_retrieval(half, table, prior, relevant);
  CHECK(std::abs(r.precision - 0.5) <= 0.1);
  CHECK(r.recall >= 0.0);
  CHECK(r.recall <= 1.0);

  DatasetStore unlabeled(prior.manifest(), DatasetRole::prior);
  unlabeled.append_episode({{0, 0, {0, 0, 0}, {0, 0}, std::nullopt}});
  CHECK_THROWS(evaluate_retrieval(RetrievalMask{{1}, 0.5, 1}, table_from({0.0}), unlabeled, relevant));
}

TEST_CASE("separation curves recomputed from the exported CSV") {
  const auto model = random_model(4);
  const auto prior = labeled_store(6, 8, 9);
  const auto task = labeled_store(1, 8, 10, DatasetRole::task);
  const auto table = normalize_scores(score_prior(model, prior, task));
  const auto mask = select(table, 0.5);
  std::stringstream csv;
  write_score_csv(csv, table, mask, prior);
  const auto rows = read_score_csv(csv);
  REQUIRE(rows.size() == prior.size());
  std::map<std::pair<std::uint64_t, std::string>, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].episode == prior[i].episode_id);
    CHECK(rows[i].t == prior[i].t);
    CHECK(rows[i].normalized_score == table.normalized[i]);
    CHECK(rows[i].raw_score == table.raw[i]);
    CHECK(rows[i].selected == bool(mask.selected[i]));
    auto& a = acc[{rows[i].t, rows[i].task_label}];
    a.first += rows[i].normalized_score;
    a.second += 1;
  }
  const auto curves = separation_curves(table, prior);
  REQUIRE(curves.size() == acc.size());
  std::size_t k = 0;
  for (const auto& [key, a] : acc) {
    CHECK(curves[k].timestep == key.first);
    CHECK(curves[k].label == key.second);
    CHECK(curves[k].count == a.second);
    CHECK(curves[k].mean_normalized_score == doctest::Approx(a.first / a.second).epsilon(1e-12));
    ++k;
  }
  CHECK(selection_rate(mask, prior, [](const Transition& t) { return t.task_label == "nobody"; }) == 0.0);
  CHECK(std::isnan(mean_score(table, prior, [](const Transition& t) { return t.task_label == "nobody"; })));
}

TEST_CASE("expand_context refuses to regrow an expanded mask") {
  const auto prior = labeled_store(1, 6, 1);
  RetrievalMask m{std::vector<std::uint8_t>(6, 0), 0.5, 1};
  m.selected[5] = 1;
  const auto e = expand_context(m, prior, 2);
  CHECK(e.count() == 2);
  CHECK(expand_context(e, prior, 1).selected == e.selected);
  CHECK_THROWS(expand_context(e, prior, 4));
}
