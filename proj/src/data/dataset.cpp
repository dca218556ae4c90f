#include <algorithm>
#include <string>

#include "bret/data/dataset.hpp"
#include "bret/error.hpp"

namespace bret {

DatasetStore::DatasetStore(Manifest manifest, DatasetRole role)
    : manifest_(manifest), role_(role) {}

void DatasetStore::append_episode(std::vector<Transition> episode) {
  if (episode.empty()) throw DataError("empty episode");
  const std::uint64_t id = episode.front().episode_id;
  if (!episodes_.empty() && id <= episodes_.back().episode_id) {
    throw DataError("episode " + std::to_string(id) + " is not after episode " +
                    std::to_string(episodes_.back().episode_id));
  }
  const auto& label = episode.front().task_label;
  for (std::size_t i = 0; i < episode.size(); ++i) {
    const Transition& tr = episode[i];
    if (tr.episode_id != id) throw DataError("mixed episode ids in one episode");
    if (tr.state.size() != manifest_.state_dim) {
      throw DataError("state has " + std::to_string(tr.state.size()) + " entries, manifest says " +
                      std::to_string(manifest_.state_dim));
    }
    if (tr.action.size() != manifest_.action_dim) {
      throw DataError("action has " + std::to_string(tr.action.size()) +
                      " entries, manifest says " + std::to_string(manifest_.action_dim));
    }
    if (tr.task_label != label) {
      throw DataError("task_label changes within episode " + std::to_string(id));
    }
    if (role_ == DatasetRole::retrieved) {
      if (i > 0 && tr.t <= episode[i - 1].t) {
        throw DataError("timesteps not increasing in episode " + std::to_string(id));
      }
    } else if (tr.t != i) {
      throw DataError("episode " + std::to_string(id) + ": expected t=" + std::to_string(i) +
                      ", got t=" + std::to_string(tr.t));
    }
  }
  episodes_.push_back({id, transitions_.size(), episode.size()});
  transitions_.insert(transitions_.end(), std::make_move_iterator(episode.begin()),
                      std::make_move_iterator(episode.end()));
}

std::span<const Transition> DatasetStore::episode(std::size_t episode_index) const {
  const auto& e = episodes_.at(episode_index);
  return std::span<const Transition>(transitions_).subspan(e.begin, e.length);
}

std::size_t DatasetStore::episode_index_of(std::size_t i) const {
  auto it = std::upper_bound(episodes_.begin(), episodes_.end(), i,
                             [](std::size_t v, const EpisodeSpan& e) { return v < e.begin; });
  return static_cast<std::size_t>(it - episodes_.begin()) - 1;
}

std::optional<std::size_t> DatasetStore::find(std::uint64_t episode_id, std::uint64_t t) const {
  auto it = std::lower_bound(episodes_.begin(), episodes_.end(), episode_id,
                             [](const EpisodeSpan& e, std::uint64_t v) { return e.episode_id < v; });
  if (it == episodes_.end() || it->episode_id != episode_id) return std::nullopt;
  auto first = transitions_.begin() + static_cast<std::ptrdiff_t>(it->begin);
  auto last = first + static_cast<std::ptrdiff_t>(it->length);
  auto hit = std::lower_bound(first, last, t,
                              [](const Transition& tr, std::uint64_t v) { return tr.t < v; });
  if (hit == last || hit->t != t) return std::nullopt;
  return static_cast<std::size_t>(hit - transitions_.begin());
}

std::vector<std::size_t> window_indices(const DatasetStore& store, std::uint64_t episode_id,
                                        std::uint64_t t, std::size_t H) {
  if (H == 0) throw std::invalid_argument("window_indices: H must be positive");
  const auto idx = store.find(episode_id, t);
  if (!idx) {
    throw std::out_of_range("window_indices: no transition (" + std::to_string(episode_id) +
                            ", " + std::to_string(t) + ")");
  }
  const std::size_t begin = store.episodes()[store.episode_index_of(*idx)].begin;
  std::size_t first = *idx;
  while (*idx - first + 1 < H && first > begin &&
         store[first - 1].t + 1 == store[first].t) {
    --first;
  }
  std::vector<std::size_t> out;
  out.reserve(*idx - first + 1);
  for (std::size_t i = first; i <= *idx; ++i) out.push_back(i);
  return out;
}

std::string_view role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::prior:
      return "prior";
    case DatasetRole::task:
      return "task";
    case DatasetRole::retrieved:
      return "retrieved";
  }
  return "unknown";
}

}  // namespace bret
