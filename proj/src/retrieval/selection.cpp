#include <algorithm>
#include <numeric>
#include <string>

#include "bret/error.hpp"
#include "bret/retrieval/retrieval.hpp"

namespace bret {

std::size_t RetrievalMask::count() const {
  return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), std::uint8_t{1}));
}

ScoreTable normalize_scores(ScoreTable table) {
  table.normalized.resize(table.raw.size());
  if (table.raw.empty()) return table;
  const auto [lo, hi] = std::minmax_element(table.raw.begin(), table.raw.end());
  table.f_minus = *lo;
  table.f_plus = *hi;
  const double span = table.f_plus - table.f_minus;
  for (std::size_t i = 0; i < table.raw.size(); ++i) {
    table.normalized[i] = span > 0.0 ? (table.raw[i] - table.f_minus) / span : 1.0;
  }
  return table;
}

RetrievalMask select(const ScoreTable& table, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("select: delta must lie in [0, 1], got " + std::to_string(delta));
  }
  if (table.normalized.size() != table.raw.size()) {
    throw std::invalid_argument("select: scores have not been normalized");
  }
  RetrievalMask mask;
  mask.delta = delta;
  mask.selected.resize(table.normalized.size());
  for (std::size_t i = 0; i < table.normalized.size(); ++i) {
    mask.selected[i] = table.normalized[i] > delta ? 1 : 0;
  }
  return mask;
}

RetrievalMask expand_context(const RetrievalMask& mask, const DatasetStore& prior, std::size_t H) {
  require_dim(mask.selected.size(), prior.size(), "retrieval mask");
  if (H == 0) throw std::invalid_argument("expand_context: H must be positive");
  // The mask remembers the horizon it was grown with, which makes a repeat
  // call a no-op. Growing an already expanded mask further would treat the
  // added context as anchors, so that is refused.
  if (mask.context_horizon >= H) return mask;
  if (mask.context_horizon > 1)
    throw std::invalid_argument("expand_context: mask already expanded with a smaller horizon");
  RetrievalMask out = mask;
  out.context_horizon = H;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (!mask.selected[i]) continue;
    for (std::size_t j : window_indices(prior, prior[i].episode_id, prior[i].t, H)) out.selected[j] = 1;
  }
  return out;
}

DatasetStore build_retrieved(const DatasetStore& prior, const RetrievalMask& mask) {
  require_dim(mask.selected.size(), prior.size(), "retrieval mask");
  DatasetStore out(prior.manifest(), DatasetRole::retrieved);
  for (std::size_t e = 0; e < prior.num_episodes(); ++e) {
    const auto& span = prior.episodes()[e];
    std::vector<Transition> kept;
    for (std::size_t i = span.begin; i < span.begin + span.length; ++i) {
      if (mask.selected[i]) kept.push_back(prior[i]);
    }
    if (!kept.empty()) out.append_episode(std::move(kept));
  }
  return out;
}

}  // namespace bret
