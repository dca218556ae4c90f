#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "bret/data/dataset.hpp"
#include "bret/embed/vae.hpp"
#include "bret/env/pick_place.hpp"
#include "bret/env/rollout.hpp"
#include "bret/harness/config.hpp"
#include "bret/harness/metrics.hpp"
#include "bret/policy/gmm_policy.hpp"
#include "bret/retrieval/retrieval.hpp"

namespace bret {

// Every random draw below comes from SeededRng(config.seed) through named
// substreams: "prior" and "task" (data generation), "embedder", "policy"
// (with children "init", "train", "finetune"), "eval", and "interventions".

std::unique_ptr<PickPlaceEnv> make_env(const ExperimentConfig& config);
PickPlaceTask target_task(const ExperimentConfig& config);

struct ExperimentData {
  std::unique_ptr<PickPlaceEnv> env;
  PickPlaceTask target;
  DatasetStore prior;
  DatasetStore task;
};

/// Loads the datasets named in config.paths, generating any that are unset.
ExperimentData prepare_data(const ExperimentConfig& config);

TrainedEmbedder fit_embedder(const ExperimentConfig& config, const DatasetStore& prior);

struct RetrievalOutcome {
  ScoreTable table;
  RetrievalMask mask;
  DatasetStore retrieved;
};

/// Score, normalize, threshold at config.delta, expand by retrieval.context.
RetrievalOutcome retrieve(const ExperimentConfig& config, const EmbedderModel& model,
                          const DatasetStore& prior, const DatasetStore& task);

/// Thresholds an existing score table (for sweeps that reuse one table).
RetrievalOutcome retrieve_from_scores(const ExperimentConfig& config, const ScoreTable& table,
                                      const DatasetStore& prior, double delta);

/// Prior transitions whose label is in retrieval.relevant_labels.
RetrievalMask ground_truth_mask(const ExperimentConfig& config, const DatasetStore& prior);

/// The prior-side training set a method uses; `retrieved` is consulted for
/// ours and ground_truth.
DatasetStore method_retrieved_set(Method method, const DatasetStore& prior,
                                  const DatasetStore& retrieved);

/// Trains the policy for `method` (dispatching GCBC variants), starting from
/// a fresh initialization.
BcResult fit_policy(const ExperimentConfig& config, Method method, const DatasetStore& prior,
                    const DatasetStore& task, const DatasetStore& retrieved);

/// Rollout success rate of `policy` on the target task over
/// env.n_eval_episodes seeded episodes. Goal-conditioned policies receive a
/// goal drawn from `task` at the start of every episode.
EvalResult evaluate_policy(const ExperimentConfig& config, const PickPlaceEnv& env,
                           const PickPlaceTask& target, const GmmPolicy& policy,
                           const DatasetStore& task);

/// CSV columns: episode,success,steps
void write_eval_log(const std::filesystem::path& path, const EvalResult& eval);

struct PipelineResult {
  MetricsRow metrics;
  DatasetStore prior;
  DatasetStore task;
  std::optional<ScoreTable> table;  // set for method ours
  RetrievalMask mask;               // prior transitions used for training
  std::optional<RetrievalReport> report;
};

/// Full run for config.method, writing all artifacts under config.paths.out.
/// Stage failures are rethrown as StageError.
PipelineResult execute_pipeline(const ExperimentConfig& config);
MetricsRow run_pipeline(const ExperimentConfig& config);

/// One embedder and one score table shared by every delta; one policy per delta.
std::vector<MetricsRow> run_delta_sweep(const ExperimentConfig& config, const std::vector<double>& deltas);

/// Per-timestep mean normalized score per label; writes separation.csv and scores.csv.
std::vector<SeparationPoint> export_separation(const ExperimentConfig& config);

/// Pre-trains on the whole prior, then alternates intervention collection,
/// (optional) retrieval, retraining and evaluation. Row 0 is the pre-trained
/// policy. Method ours/ours_interventions retrieves; task_only does not.
std::vector<InterventionRow> run_intervention_experiment(const ExperimentConfig& config,
                                                         std::size_t n_rounds);

}  // namespace bret
