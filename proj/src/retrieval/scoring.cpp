#include <algorithm>
#include <limits>
#include <thread>

#include "bret/error.hpp"
#include "bret/retrieval/retrieval.hpp"
#include "bret/simd/kernels.hpp"

namespace bret {

std::vector<Embedding> encode_store(const EmbedderModel& model, const DatasetStore& store) {
  std::vector<Embedding> out;
  out.reserve(store.size());
  for (const Transition& tr : store.transitions()) out.push_back(encode(model, tr.state, tr.action));
  return out;
}

ScoreTable score_embeddings(const std::vector<Embedding>& prior, const std::vector<Embedding>& task,
                            std::size_t threads) {
  if (prior.empty()) throw DataError("score_prior: empty prior store");
  if (task.empty()) throw DataError("score_prior: empty task store");
  const std::size_t dim = task.front().size();
  for (const auto& z : task) require_dim(z.size(), dim, "task embedding");
  for (const auto& z : prior) require_dim(z.size(), dim, "prior embedding");

  ScoreTable table;
  table.raw.assign(prior.size(), 0.0);
  const auto& k = simd::active();
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& zt : task) best = std::min(best, k.squared_distance(prior[i].data(), zt.data(), dim));
      table.raw[i] = -std::sqrt(best);
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, prior.size());
  if (threads <= 1) {
    work(0, prior.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (prior.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < prior.size(); b += chunk) {
      pool.emplace_back(work, b, std::min(prior.size(), b + chunk));
    }
  }
  const auto [lo, hi] = std::minmax_element(table.raw.begin(), table.raw.end());
  table.f_minus = *lo;
  table.f_plus = *hi;
  return table;
}

ScoreTable score_prior(const EmbedderModel& model, const DatasetStore& prior,
                       const DatasetStore& task, std::size_t threads) {
  if (prior.empty()) throw DataError("score_prior: empty prior store");
  if (task.empty()) throw DataError("score_prior: empty task store");
  require_dim(prior.state_dim(), model.state_dim(), "prior state");
  require_dim(task.state_dim(), model.state_dim(), "task state");
  require_dim(prior.action_dim(), model.action_dim(), "prior action");
  require_dim(task.action_dim(), model.action_dim(), "task action");
  return score_embeddings(encode_store(model, prior), encode_store(model, task), threads);
}

}  // namespace bret
