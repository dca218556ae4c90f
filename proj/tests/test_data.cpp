#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bret/data/dataset.hpp"
#include "bret/data/norm_stats.hpp"
#include "bret/error.hpp"
#include "bret/nn/rng.hpp"

using namespace bret;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bret_test_data";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<Transition> make_episode(std::uint64_t id, std::size_t len, std::size_t ds, std::size_t da,
                                     SeededRng& rng, std::optional<std::string> label = std::nullopt) {
  std::vector<Transition> ep;
  for (std::size_t t = 0; t < len; ++t) {
    Transition tr;
    tr.episode_id = id;
    tr.t = t;
    for (std::size_t i = 0; i < ds; ++i) tr.state.push_back(rng.uniform(-3, 3));
    for (std::size_t i = 0; i < da; ++i) tr.action.push_back(rng.uniform(-1, 1));
    tr.task_label = label;
    ep.push_back(std::move(tr));
  }
  return ep;
}

DatasetStore random_store(std::size_t episodes, std::size_t len, std::uint64_t seed,
                          DatasetRole role = DatasetRole::prior) {
  SeededRng rng(seed);
  DatasetStore s(Manifest{1, 4, 2}, role);
  for (std::size_t e = 0; e < episodes; ++e) s.append_episode(make_episode(e, len, 4, 2, rng, e % 2 ? "B" : "A"));
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

}  // namespace

TEST_CASE("load: manifest plus episodes of lengths 3 and 4") {
  const auto p = temp_file("two_eps.jsonl");
  std::string text = R"({"version":1,"state_dim":4,"action_dim":2})" "\n";
  for (int e = 0; e < 2; ++e) {
    for (int t = 0; t < 3 + e; ++t) {
      text += R"({"episode":)" + std::to_string(e) + R"(,"t":)" + std::to_string(t) +
              R"(,"state":[0,1,2,3],"action":[0.5,-0.5],"task_label":"A"})" "\n";
    }
  }
  write_text(p, text);
  const auto store = load_dataset(p, DatasetRole::prior);
  CHECK(store.size() == 7);
  CHECK(store.num_episodes() == 2);
  CHECK(store.episode(1).size() == 4);
  CHECK(store[6].task_label == "A");
}

TEST_CASE("load: manifest only gives an empty store") {
  const auto p = temp_file("empty.jsonl");
  write_text(p, R"({"version":1,"state_dim":4,"action_dim":2})" "\n");
  const auto store = load_dataset(p, DatasetRole::prior);
  CHECK(store.empty());
  CHECK(store.state_dim() == 4);
}

TEST_CASE("load: short state names the offending line") {
  const auto p = temp_file("short.jsonl");
  write_text(p, R"({"version":1,"state_dim":4,"action_dim":2})" "\n"
                R"({"episode":0,"t":0,"state":[0,1,2,3],"action":[0,0]})" "\n"
                R"({"episode":0,"t":1,"state":[0,1,2],"action":[0,0]})" "\n");
  try {
    load_dataset(p, DatasetRole::prior);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("load: malformed input is rejected with a line number") {
  const auto p = temp_file("bad.jsonl");
  SUBCASE("not json") {
    write_text(p, R"({"version":1,"state_dim":1,"action_dim":1})" "\n{oops\n");
    CHECK_THROWS_AS(load_dataset(p, DatasetRole::prior), DataError);
  }
  SUBCASE("timestep gap") {
    write_text(p, R"({"version":1,"state_dim":1,"action_dim":1})" "\n"
                  R"({"episode":0,"t":0,"state":[0],"action":[0]})" "\n"
                  R"({"episode":0,"t":2,"state":[0],"action":[0]})" "\n");
    CHECK_THROWS_AS(load_dataset(p, DatasetRole::prior), DataError);
  }
  SUBCASE("label changes inside an episode") {
    write_text(p, R"({"version":1,"state_dim":1,"action_dim":1})" "\n"
                  R"({"episode":0,"t":0,"state":[0],"action":[0],"task_label":"A"})" "\n"
                  R"({"episode":0,"t":1,"state":[0],"action":[0],"task_label":"B"})" "\n");
    CHECK_THROWS_AS(load_dataset(p, DatasetRole::prior), DataError);
  }
  SUBCASE("missing file") { CHECK_THROWS(load_dataset(temp_file("nope.jsonl"), DatasetRole::prior)); }
}

TEST_CASE("append_episode enforces store invariants") {
  SeededRng rng(1);
  DatasetStore s(Manifest{1, 4, 2}, DatasetRole::prior);
  s.append_episode(make_episode(3, 2, 4, 2, rng));
  CHECK_THROWS_AS(s.append_episode(make_episode(3, 2, 4, 2, rng)), DataError);  // duplicate id
  auto bad = make_episode(4, 2, 4, 2, rng);
  bad[1].state.pop_back();
  CHECK_THROWS_AS(s.append_episode(bad), DataError);
  auto late_start = make_episode(5, 2, 4, 2, rng);
  late_start[0].t = 1;
  late_start[1].t = 2;
  CHECK_THROWS_AS(s.append_episode(late_start), DataError);

  DatasetStore r(Manifest{1, 4, 2}, DatasetRole::retrieved);
  r.append_episode(late_start);  // subsets keep their original timesteps
  CHECK(r.size() == 2);
}

TEST_CASE("iteration order is by episode id then t") {
  SeededRng rng(2);
  DatasetStore s(Manifest{1, 4, 2}, DatasetRole::prior);
  s.append_episode(make_episode(1, 3, 4, 2, rng));
  s.append_episode(make_episode(9, 2, 4, 2, rng));
  CHECK_THROWS_AS(s.append_episode(make_episode(4, 2, 4, 2, rng)), DataError);  // out of order
  REQUIRE(s.size() == 5);
  CHECK(s[0].episode_id == 1);
  CHECK(s[2].t == 2);
  CHECK(s[3].episode_id == 9);
  std::size_t total = 0;
  for (const auto& ep : s.episodes()) total += ep.length;
  CHECK(total == s.size());
  CHECK(s.find(9, 1) == std::optional<std::size_t>(4));
  CHECK(!s.find(9, 2));
}

TEST_CASE("save then load reproduces every field bit for bit") {
  auto store = random_store(5, 7, 11);
  // Awkward doubles survive the text round trip.
  DatasetStore s(Manifest{1, 4, 2}, DatasetRole::prior);
  SeededRng rng(0);
  auto ep = make_episode(0, 2, 4, 2, rng);
  ep[0].state = {0.1, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(), -1e300};
  ep[1].action = {std::nextafter(1.0, 2.0), -0.0};
  s.append_episode(ep);
  for (const DatasetStore* src : {&store, &s}) {
    const auto p = temp_file("round.jsonl");
    save_dataset(*src, p);
    const auto back = load_dataset(p, DatasetRole::prior);
    REQUIRE(back.size() == src->size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == (*src)[i]);
    CHECK(back.manifest() == src->manifest());
    // Two loads iterate identically and saving again is byte-stable.
    const auto p2 = temp_file("round2.jsonl");
    save_dataset(back, p2);
    std::ifstream a(p), b(p2);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
}

TEST_CASE("norm stats: symmetric and constant dimensions") {
  DatasetStore s(Manifest{1, 2, 1}, DatasetRole::prior);
  std::vector<Transition> ep;
  for (int t = 0; t < 4; ++t) ep.push_back({0, std::uint64_t(t), {t % 2 ? 1.0 : -1.0, 5.0}, {2.0}, std::nullopt});
  s.append_episode(ep);
  const auto ns = compute_norm_stats(s, 1e-6);
  CHECK(ns.state_mean[0] == doctest::Approx(0.0));
  CHECK(ns.state_std[0] == doctest::Approx(1.0));
  CHECK(ns.state_std[1] == 1e-6);
  CHECK(ns.action_std[0] == 1e-6);
  CHECK_THROWS_AS(compute_norm_stats(DatasetStore(Manifest{1, 2, 1}, DatasetRole::prior)), DataError);
}

TEST_CASE("norm stats match a two-pass computation") {
  const auto store = random_store(10, 10, 5);
  REQUIRE(store.size() == 100);
  const auto ns = compute_norm_stats(store);
  for (std::size_t d = 0; d < 4; ++d) {
    double mean = 0;
    for (const auto& tr : store.transitions()) mean += tr.state[d];
    mean /= 100.0;
    double var = 0;
    for (const auto& tr : store.transitions()) var += (tr.state[d] - mean) * (tr.state[d] - mean);
    const double sd = std::sqrt(var / 100.0);
    CHECK(std::abs(ns.state_mean[d] - mean) <= 1e-6);
    CHECK(std::abs(ns.state_std[d] - sd) <= 1e-6);
    CHECK(ns.state_std[d] >= ns.std_floor);
  }
}

TEST_CASE("normalize: centering, scalar arithmetic, inverse") {
  NormStats ns;
  ns.state_mean = {1.0, -2.0};
  ns.state_std = {2.0, 0.5};
  ns.action_mean = {0.0};
  ns.action_std = {4.0};
  Transition x{0, 0, {3.0, -2.0}, {8.0}, std::nullopt};
  const auto n = normalize(ns, x);
  CHECK(n.state[0] == 1.0);
  CHECK(n.state[1] == 0.0);
  CHECK(n.action[0] == 2.0);
  Transition at_mean{0, 0, ns.state_mean, ns.action_mean, std::nullopt};
  for (double v : normalize(ns, at_mean).state) CHECK(v == 0.0);

  const auto store = random_store(4, 6, 9);
  const auto stats = compute_norm_stats(store);
  for (const auto& tr : store.transitions()) {
    const auto back = denormalize(stats, normalize(stats, tr));
    for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(back.state[d] - tr.state[d]) <= 1e-6 * (1 + std::abs(tr.state[d])));
    for (std::size_t d = 0; d < 2; ++d) CHECK(std::abs(back.action[d] - tr.action[d]) <= 1e-6 * (1 + std::abs(tr.action[d])));
  }
  CHECK_THROWS_AS(ns.normalize_state(std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("window_indices") {
  const auto store = random_store(2, 8, 4);
  const auto w1 = window_indices(store, 1, 4, 1);
  REQUIRE(w1.size() == 1);
  CHECK(store[w1[0]].t == 4);
  CHECK(window_indices(store, 0, 0, 10).size() == 1);
  const auto w3 = window_indices(store, 0, 5, 3);
  REQUIRE(w3.size() == 3);
  CHECK(store[w3[0]].t == 3);
  CHECK(store[w3[1]].t == 4);
  CHECK(store[w3[2]].t == 5);
  SeededRng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t ep = rng.index(2), t = rng.index(8);
    const std::size_t H = 1 + rng.index(12);
    const auto w = window_indices(store, ep, t, H);
    REQUIRE(!w.empty());
    CHECK(std::is_sorted(w.begin(), w.end()));
    const std::uint64_t lo = t + 1 >= H ? t + 1 - H : 0;
    for (auto i : w) {
      CHECK(store[i].episode_id == ep);
      CHECK(store[i].t >= lo);
      CHECK(store[i].t <= t);
    }
    CHECK(w.size() == std::min<std::size_t>(H, t + 1));
  }
  CHECK_THROWS(window_indices(store, 7, 0, 1));
}

TEST_CASE("window_indices stops at a gap in a retrieved store") {
  SeededRng rng(3);
  DatasetStore r(Manifest{1, 4, 2}, DatasetRole::retrieved);
  auto ep = make_episode(0, 6, 4, 2, rng);
  ep.erase(ep.begin() + 2);  // t = 0 1 3 4 5
  r.append_episode(ep);
  const auto w = window_indices(r, 0, 4, 5);
  REQUIRE(w.size() == 2);
  CHECK(r[w[0]].t == 3);
}
