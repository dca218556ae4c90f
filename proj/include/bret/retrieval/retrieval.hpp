#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "bret/data/dataset.hpp"
#include "bret/embed/vae.hpp"

namespace bret {

/// Best-match similarity of every prior transition to the task set.
struct ScoreTable {
  std::vector<double> raw;         // raw[i] = max_j similarity(prior_i, task_j), store order
  std::vector<double> normalized;  // min-max of raw into [0, 1]
  double f_plus = 0.0;             // max_i raw[i]
  double f_minus = 0.0;            // min_i raw[i]
};

struct RetrievalMask {
  std::vector<std::uint8_t> selected;  // aligned with the prior store
  double delta = 0.0;
  std::size_t context_horizon = 1;

  std::size_t count() const;
};

struct SeparationPoint {
  std::uint64_t timestep;
  std::string label;
  double mean_normalized_score;
  std::size_t count;
};

struct RetrievalReport {
  std::size_t n_selected = 0;
  double fraction_selected = 0.0;
  double precision = 1.0;  // 1.0 by convention when nothing is selected
  double recall = 0.0;
  std::vector<SeparationPoint> separation;
};

std::vector<Embedding> encode_store(const EmbedderModel& model, const DatasetStore& store);

/// raw_i = max over task transitions of similarity(encode(prior_i), encode(task_j)),
/// with f_plus/f_minus filled and `normalized` left empty. Rows are split
/// across worker threads; each row is computed independently so the result
/// does not depend on the thread count.
ScoreTable score_prior(const EmbedderModel& model, const DatasetStore& prior,
                       const DatasetStore& task, std::size_t threads = 0);

/// Same, from precomputed embeddings.
ScoreTable score_embeddings(const std::vector<Embedding>& prior, const std::vector<Embedding>& task,
                            std::size_t threads = 0);

/// Fills `normalized` with (raw - f_minus) / (f_plus - f_minus). When every
/// raw score is equal all normalized scores are 1.0.
ScoreTable normalize_scores(ScoreTable table);

/// selected_i = normalized_i > delta. delta must lie in [0, 1].
RetrievalMask select(const ScoreTable& table, double delta);

/// Adds the up-to H-1 in-episode predecessors of every selected transition.
/// Expects a mask straight from select(); a mask whose context_horizon is
/// already >= H is returned as is.
RetrievalMask expand_context(const RetrievalMask& mask, const DatasetStore& prior, std::size_t H);

/// The selected transitions, in store order, with their (episode_id, t) intact.
DatasetStore build_retrieved(const DatasetStore& prior, const RetrievalMask& mask);

/// Precision/recall against ground-truth labels plus per-timestep separation
/// curves. Every prior transition must carry a task_label.
RetrievalReport evaluate_retrieval(const RetrievalMask& mask, const ScoreTable& table,
                                   const DatasetStore& prior,
                                   const std::set<std::string>& relevant_labels);

/// Per (timestep, label) mean normalized score, sorted by timestep then label.
std::vector<SeparationPoint> separation_curves(const ScoreTable& table, const DatasetStore& prior);

/// Fraction of transitions satisfying `filter` that are selected (0 if none match).
double selection_rate(const RetrievalMask& mask, const DatasetStore& prior,
                      const std::function<bool(const Transition&)>& filter);

/// Mean normalized score over transitions satisfying `filter` (NaN if none match).
double mean_score(const ScoreTable& table, const DatasetStore& prior,
                  const std::function<bool(const Transition&)>& filter);

/// CSV columns: episode,t,raw_score,normalized_score,selected,task_label
void write_score_csv(std::ostream& out, const ScoreTable& table, const RetrievalMask& mask,
                     const DatasetStore& prior);

/// Reads back the CSV written above. Only the score and mask columns are returned.
struct ScoreCsvRow {
  std::uint64_t episode, t;
  double raw_score, normalized_score;
  bool selected;
  std::string task_label;
};
std::vector<ScoreCsvRow> read_score_csv(std::istream& in);

/// CSV columns: timestep,label,mean_normalized_score,count
void write_separation_csv(std::ostream& out, const std::vector<SeparationPoint>& curves);

}  // namespace bret
