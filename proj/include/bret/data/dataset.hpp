#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bret {

struct Transition {
  std::uint64_t episode_id = 0;
  std::uint64_t t = 0;
  std::vector<double> state;
  std::vector<double> action;
  /// Ground truth for evaluation only. Embedding, retrieval scoring and
  /// policy training never look at it.
  std::optional<std::string> task_label;

  bool operator==(const Transition&) const = default;
};

struct Manifest {
  int version = 1;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;

  bool operator==(const Manifest&) const = default;
};

enum class DatasetRole { prior, task, retrieved };

struct EpisodeSpan {
  std::uint64_t episode_id;
  std::size_t begin;   // flat index of the first transition
  std::size_t length;
};

/// Transitions grouped into episodes, iterated by ascending (episode_id, t).
///
/// Prior and task stores require each episode's timesteps to run 0,1,2,...
/// A retrieved store holds an arbitrary subset of a prior store, so it only
/// requires timesteps to be strictly increasing within an episode.
class DatasetStore {
 public:
  DatasetStore() = default;
  DatasetStore(Manifest manifest, DatasetRole role);

  /// Appends one episode. Throws DataError if it breaks an invariant.
  void append_episode(std::vector<Transition> episode);

  const Manifest& manifest() const { return manifest_; }
  DatasetRole role() const { return role_; }
  std::size_t state_dim() const { return manifest_.state_dim; }
  std::size_t action_dim() const { return manifest_.action_dim; }

  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  std::size_t num_episodes() const { return episodes_.size(); }

  const Transition& operator[](std::size_t i) const { return transitions_[i]; }
  std::span<const Transition> transitions() const { return transitions_; }
  std::span<const EpisodeSpan> episodes() const { return episodes_; }
  std::span<const Transition> episode(std::size_t episode_index) const;

  /// Index into episodes() of the episode containing flat index i.
  std::size_t episode_index_of(std::size_t i) const;
  std::optional<std::size_t> find(std::uint64_t episode_id, std::uint64_t t) const;

 private:
  Manifest manifest_;
  DatasetRole role_ = DatasetRole::prior;
  std::vector<Transition> transitions_;
  std::vector<EpisodeSpan> episodes_;
};

DatasetStore load_dataset(const std::filesystem::path& path, DatasetRole role);
void save_dataset(const DatasetStore& store, const std::filesystem::path& path);

/// Flat indices of (episode_id, t) and up to H-1 immediate predecessors in the
/// same episode, in time order. Stops early at the episode start or at a gap.
std::vector<std::size_t> window_indices(const DatasetStore& store, std::uint64_t episode_id,
                                        std::uint64_t t, std::size_t H);

std::string_view role_name(DatasetRole role);

}  // namespace bret
