#include "bret/harness/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <memory>

#include "bret/error.hpp"
#include "bret/harness/checkpoint.hpp"

namespace bret {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

SeededRng root(const ExperimentConfig& c) { return SeededRng(c.seed); }

EmbedderConfig embedder_config(const ExperimentConfig& c) {
  return {c.vae.latent_dim, c.vae.hidden, c.vae.beta, c.retrieval.action_scale};
}

EmbedderTrainConfig embedder_train_config(const ExperimentConfig& c) {
  return {c.vae.steps, c.vae.batch, AdamConfig{c.vae.lr, 0.9, 0.999, 1e-8}};
}

PolicyConfig policy_config(const ExperimentConfig& c, bool goal_conditioned) {
  return {c.policy.modes, c.policy.hidden, c.policy.sigma_floor, goal_conditioned};
}

BcConfig bc_config(const ExperimentConfig& c) {
  return {c.policy.steps, c.policy.batch, AdamConfig{c.policy.lr, 0.9, 0.999, 1e-8}};
}

bool uses_retrieval(Method m) { return m == Method::ours || m == Method::ours_interventions; }

void write_config(const ExperimentConfig& c) {
  std::ofstream out(c.out_dir() / "config.json", std::ios::trunc);
  out << to_json(c).dump(2) << '\n';
}

bool fully_labeled(const DatasetStore& store) {
  for (const auto& tr : store.transitions()) {
    if (!tr.task_label) return false;
  }
  return true;
}

RetrievalMask full_mask(const DatasetStore& prior, std::uint8_t value) {
  RetrievalMask m;
  m.selected.assign(prior.size(), value);
  return m;
}

void fill_retrieval_metrics(MetricsRow& row, const RetrievalMask& mask, const DatasetStore& prior,
                            const ExperimentConfig& c, const ScoreTable* table) {
  row.n_retrieved = mask.count();
  row.fraction_retrieved = prior.empty() ? 0.0 : static_cast<double>(row.n_retrieved) / static_cast<double>(prior.size());
  if (fully_labeled(prior)) {
    const std::set<std::string> relevant(c.retrieval.relevant_labels.begin(), c.retrieval.relevant_labels.end());
    const auto rep = evaluate_retrieval(mask, table ? *table : ScoreTable{}, prior, relevant);
    row.precision = rep.precision;
    row.recall = rep.recall;
  } else {
    row.precision = std::numeric_limits<double>::quiet_NaN();
    row.recall = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

std::unique_ptr<PickPlaceEnv> make_env(const ExperimentConfig& c) {
  if (c.env.name == "multi_task") {
    PickPlaceConfig pc = MultiTaskEnv::default_config();
    pc.num_objects = c.env.num_objects;
    pc.max_steps = c.env.max_steps;
    return std::make_unique<MultiTaskEnv>(pc);
  }
  PickPlaceConfig pc;
  pc.max_steps = c.env.max_steps;
  return std::make_unique<TwoBinsEnv>(pc);
}

PickPlaceTask target_task(const ExperimentConfig& c) { return {c.env.target_object, c.env.target_bin}; }

ExperimentData prepare_data(const ExperimentConfig& c) {
  return stage("data", [&] {
    ExperimentData d;
    d.env = make_env(c);
    d.target = target_task(c);
    const SeededRng rng = root(c);
    if (!c.paths.prior.empty()) {
      d.prior = load_dataset(c.paths.prior, DatasetRole::prior);
    } else {
      SeededRng r = rng.substream("prior");
      if (c.env.name == "multi_task") {
        std::vector<std::pair<PickPlaceTask, std::size_t>> plan;
        for (const auto& t : d.env->tasks()) plan.emplace_back(t, c.env.episodes_per_task);
        d.prior = generate_dataset(*d.env, plan, c.env.noise_std, r, DatasetRole::prior);
      } else {
        d.prior = generate_dataset(*d.env, c.env.n_relevant, c.env.n_adversarial, c.env.noise_std, r,
                                   DatasetRole::prior);
      }
    }
    if (!c.paths.task.empty()) {
      d.task = load_dataset(c.paths.task, DatasetRole::task);
    } else {
      SeededRng r = rng.substream("task");
      d.task = generate_dataset(*d.env, {{d.target, c.env.n_task_demos}}, c.env.noise_std, r,
                                DatasetRole::task);
    }
    if (d.prior.empty()) throw DataError("prior dataset is empty");
    if (d.prior.manifest() != d.task.manifest() && !d.task.empty()) {
      throw DimensionError("prior and task datasets have different dimensions");
    }
    if (d.prior.state_dim() != d.env->state_dim() || d.prior.action_dim() != d.env->action_dim()) {
      throw DimensionError("dataset dimensions do not match environment " + c.env.name);
    }
    return d;
  });
}

TrainedEmbedder fit_embedder(const ExperimentConfig& c, const DatasetStore& prior) {
  return stage("embedder", [&] {
    SeededRng rng = root(c).substream("embedder");
    return train_embedder(prior, embedder_config(c), embedder_train_config(c), rng);
  });
}

RetrievalOutcome retrieve_from_scores(const ExperimentConfig& c, const ScoreTable& table,
                                      const DatasetStore& prior, double delta) {
  RetrievalOutcome out;
  out.table = table;
  out.mask = select(table, delta);
  if (c.retrieval.context > 1) out.mask = expand_context(out.mask, prior, c.retrieval.context);
  out.retrieved = build_retrieved(prior, out.mask);
  return out;
}

RetrievalOutcome retrieve(const ExperimentConfig& c, const EmbedderModel& model,
                          const DatasetStore& prior, const DatasetStore& task) {
  return stage("retrieval", [&] {
    const ScoreTable table = normalize_scores(score_prior(model, prior, task));
    return retrieve_from_scores(c, table, prior, c.delta);
  });
}

RetrievalMask ground_truth_mask(const ExperimentConfig& c, const DatasetStore& prior) {
  const std::set<std::string> relevant(c.retrieval.relevant_labels.begin(), c.retrieval.relevant_labels.end());
  RetrievalMask m = full_mask(prior, 0);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const auto& label = prior[i].task_label;
    if (!label) throw DataError("ground_truth retrieval needs labeled prior data");
    m.selected[i] = relevant.contains(*label) ? 1 : 0;
  }
  return m;
}

DatasetStore method_retrieved_set(Method method, const DatasetStore& prior, const DatasetStore& retrieved) {
  switch (method) {
    case Method::ours:
    case Method::ours_interventions:
    case Method::ground_truth:
      return retrieved;
    case Method::mixture:
    case Method::gcbc_ft:
      return prior;
    case Method::task_only:
    case Method::gcbc:
      return DatasetStore(prior.manifest(), DatasetRole::retrieved);
  }
  return retrieved;
}

BcResult fit_policy(const ExperimentConfig& c, Method method, const DatasetStore& prior,
                    const DatasetStore& task, const DatasetStore& retrieved) {
  return stage("policy", [&] {
    const SeededRng rng = root(c).substream("policy");
    const bool gc = method == Method::gcbc || method == Method::gcbc_ft;
    SeededRng init_rng = rng.substream("init");
    GmmPolicy init = init_policy(policy_config(c, gc), prior.state_dim(), prior.action_dim(),
                                 compute_norm_stats(prior), init_rng);
    SeededRng train_rng = rng.substream("train");
    const DatasetStore empty(prior.manifest(), DatasetRole::retrieved);
    if (gc) {
      // Pre-train on the prior with hindsight goals.
      BcResult pre = train_bc(std::move(init), prior, empty, bc_config(c), train_rng);
      if (method == Method::gcbc) return pre;
      SeededRng ft_rng = rng.substream("finetune");
      BcResult ft = train_bc(std::move(pre.policy), task, prior, bc_config(c), ft_rng);
      pre.loss_trace.insert(pre.loss_trace.end(), ft.loss_trace.begin(), ft.loss_trace.end());
      ft.loss_trace = std::move(pre.loss_trace);
      return ft;
    }
    return train_bc(std::move(init), task, method_retrieved_set(method, prior, retrieved), bc_config(c),
                    train_rng);
  });
}

EvalResult evaluate_policy(const ExperimentConfig& c, const PickPlaceEnv& env, const PickPlaceTask& target,
                           const GmmPolicy& policy, const DatasetStore& task) {
  return stage("evaluate", [&] {
    const SeededRng rng = root(c).substream("eval");
    if (!policy.goal_conditioned) {
      return evaluate(policy_actor(policy, c.policy.var_scale), env, target, c.env.n_eval_episodes, rng);
    }
    if (task.empty()) throw DataError("goal-conditioned evaluation needs task demonstrations");
    auto goal = std::make_shared<std::vector<double>>();
    const double var_scale = c.policy.var_scale;
    ActionFn actor = [&policy, &task, goal, var_scale](const EnvState& s, SeededRng& r) {
      if (s.steps == 0 || goal->empty()) *goal = make_goal(task, policy.norm, r);
      return sample_action(policy, s.obs, r, var_scale, std::span<const double>(*goal));
    };
    return evaluate(actor, env, target, c.env.n_eval_episodes, rng);
  });
}

PipelineResult execute_pipeline(const ExperimentConfig& c) {
  c.validate();
  if (c.method == Method::ours_interventions) {
    throw StageError("pipeline", "method ours_interventions runs through the interventions command");
  }
  const auto start = Clock::now();
  const fs::path out = c.out_dir();
  stage("output", [&] {
    fs::create_directories(out);
    write_config(c);
  });

  ExperimentData data = prepare_data(c);
  stage("data", [&] {
    save_dataset(data.prior, out / "prior.jsonl");
    save_dataset(data.task, out / "task.jsonl");
  });

  PipelineResult res;
  DatasetStore retrieved(data.prior.manifest(), DatasetRole::retrieved);
  if (uses_retrieval(c.method)) {
    if (data.task.empty()) throw StageError("retrieval", "task dataset is empty");
    const TrainedEmbedder emb = fit_embedder(c, data.prior);
    stage("embedder", [&] { save_embedder(emb.model, out / "embedder.json"); });
    RetrievalOutcome r = retrieve(c, emb.model, data.prior, data.task);
    stage("retrieval", [&] {
      std::ofstream csv(out / "scores.csv", std::ios::trunc);
      write_score_csv(csv, r.table, r.mask, data.prior);
      save_dataset(r.retrieved, out / "retrieved.jsonl");
    });
    res.table = std::move(r.table);
    res.mask = std::move(r.mask);
    retrieved = std::move(r.retrieved);
  } else if (c.method == Method::ground_truth) {
    stage("retrieval", [&] {
      res.mask = ground_truth_mask(c, data.prior);
      retrieved = build_retrieved(data.prior, res.mask);
      save_dataset(retrieved, out / "retrieved.jsonl");
    });
  } else if (c.method == Method::mixture || c.method == Method::gcbc || c.method == Method::gcbc_ft) {
    res.mask = full_mask(data.prior, 1);
  } else {
    res.mask = full_mask(data.prior, 0);
  }

  const BcResult bc = fit_policy(c, c.method, data.prior, data.task, retrieved);
  stage("policy", [&] { save_policy(bc.policy, out / "policy.json"); });
  const EvalResult eval = evaluate_policy(c, *data.env, data.target, bc.policy, data.task);
  stage("evaluate", [&] { write_eval_log(out / "eval.csv", eval); });

  MetricsRow& row = res.metrics;
  row.seed = c.seed;
  row.method = std::string(method_name(c.method));
  row.delta = c.delta;
  row.success_rate = eval.success_rate;
  stage("report", [&] {
    fill_retrieval_metrics(row, res.mask, data.prior, c, res.table ? &*res.table : nullptr);
    if (fully_labeled(data.prior)) {
      const std::set<std::string> relevant(c.retrieval.relevant_labels.begin(), c.retrieval.relevant_labels.end());
      res.report = evaluate_retrieval(res.mask, res.table ? *res.table : ScoreTable{}, data.prior, relevant);
    }
  });
  row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  stage("report", [&] { write_metrics_csv(out / "metrics.csv", {row}); });
  res.prior = std::move(data.prior);
  res.task = std::move(data.task);
  return res;
}

MetricsRow run_pipeline(const ExperimentConfig& c) { return execute_pipeline(c).metrics; }

std::vector<MetricsRow> run_delta_sweep(const ExperimentConfig& c, const std::vector<double>& deltas) {
  c.validate();
  if (deltas.empty()) throw StageError("sweep", "empty delta list");
  for (double d : deltas) {
    if (!(d >= 0.0 && d <= 1.0)) throw StageError("sweep", "delta outside [0, 1]: " + std::to_string(d));
  }
  const fs::path out = c.out_dir();
  stage("output", [&] {
    fs::create_directories(out);
    write_config(c);
  });
  ExperimentData data = prepare_data(c);
  const TrainedEmbedder emb = fit_embedder(c, data.prior);
  stage("embedder", [&] { save_embedder(emb.model, out / "embedder.json"); });
  const ScoreTable table = stage("retrieval", [&] { return normalize_scores(score_prior(emb.model, data.prior, data.task)); });

  std::vector<MetricsRow> rows;
  for (double delta : deltas) {
    const auto start = Clock::now();
    ExperimentConfig cd = c;
    cd.delta = delta;
    const RetrievalOutcome r = stage("retrieval", [&] { return retrieve_from_scores(cd, table, data.prior, delta); });
    const BcResult bc = fit_policy(cd, Method::ours, data.prior, data.task, r.retrieved);
    const EvalResult eval = evaluate_policy(cd, *data.env, data.target, bc.policy, data.task);
    MetricsRow row;
    row.seed = c.seed;
    row.method = std::string(method_name(Method::ours));
    row.delta = delta;
    row.success_rate = eval.success_rate;
    fill_retrieval_metrics(row, r.mask, data.prior, cd, &table);
    row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rows.push_back(row);
  }
  stage("report", [&] {
    std::ofstream csv(out / "scores.csv", std::ios::trunc);
    write_score_csv(csv, table, select(table, c.delta), data.prior);
    write_metrics_csv(out / "sweep.csv", rows);
  });
  return rows;
}

std::vector<SeparationPoint> export_separation(const ExperimentConfig& c) {
  c.validate();
  const fs::path out = c.out_dir();
  stage("output", [&] { fs::create_directories(out); });
  ExperimentData data = prepare_data(c);
  if (!fully_labeled(data.prior)) throw StageError("separation", "prior dataset is not fully labeled");
  const EmbedderModel model = [&] {
    const fs::path ckpt = c.paths.embedder.empty() ? fs::path() : fs::path(c.paths.embedder);
    if (!ckpt.empty()) return stage("embedder", [&] { return load_embedder(ckpt); });
    TrainedEmbedder emb = fit_embedder(c, data.prior);
    stage("embedder", [&] { save_embedder(emb.model, out / "embedder.json"); });
    return std::move(emb.model);
  }();
  const RetrievalOutcome r = retrieve(c, model, data.prior, data.task);
  return stage("separation", [&] {
    auto curves = separation_curves(r.table, data.prior);
    std::ofstream sep(out / "separation.csv", std::ios::trunc);
    write_separation_csv(sep, curves);
    std::ofstream csv(out / "scores.csv", std::ios::trunc);
    write_score_csv(csv, r.table, r.mask, data.prior);
    return curves;
  });
}

std::vector<InterventionRow> run_intervention_experiment(const ExperimentConfig& c, std::size_t n_rounds) {
  c.validate();
  const bool with_retrieval = uses_retrieval(c.method);
  if (!with_retrieval && c.method != Method::task_only) {
    throw StageError("interventions", "method must be ours, ours_interventions or task_only");
  }
  const fs::path out = c.out_dir();
  stage("output", [&] {
    fs::create_directories(out);
    write_config(c);
  });
  ExperimentData data = prepare_data(c);
  const SeededRng rng = root(c);
  const DatasetStore empty(data.prior.manifest(), DatasetRole::retrieved);

  const GmmPolicy pretrained = stage("policy", [&] {
    SeededRng init_rng = rng.substream("policy").substream("init");
    GmmPolicy init = init_policy(policy_config(c, false), data.prior.state_dim(), data.prior.action_dim(),
                                 compute_norm_stats(data.prior), init_rng);
    SeededRng pre_rng = rng.substream("policy").substream("pretrain");
    return train_bc(std::move(init), data.prior, empty, bc_config(c), pre_rng).policy;
  });
  std::optional<EmbedderModel> embedder;
  if (with_retrieval) embedder = fit_embedder(c, data.prior).model;

  std::vector<InterventionRow> rows;
  const std::string method(method_name(c.method));
  auto record = [&](std::size_t round, std::size_t cumulative, const GmmPolicy& policy,
                    const RetrievalMask& mask, Clock::time_point start) {
    const EvalResult eval = evaluate_policy(c, *data.env, data.target, policy, data.task);
    InterventionRow row;
    row.round = round;
    row.cumulative_interventions = cumulative;
    row.metrics.seed = c.seed;
    row.metrics.method = method;
    row.metrics.delta = c.delta;
    row.metrics.success_rate = eval.success_rate;
    fill_retrieval_metrics(row.metrics, mask, data.prior, c, nullptr);
    row.metrics.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rows.push_back(row);
  };

  record(0, 0, pretrained, full_mask(data.prior, 0), Clock::now());
  InterventionBuffer buffer(data.prior.manifest(), data.env->task_label(data.target));
  GmmPolicy current = pretrained;
  const ActionFn expert = expert_actor(*data.env, data.target, 0.0);
  for (std::size_t round = 1; round <= n_rounds; ++round) {
    const auto start = Clock::now();
    const InterventionRound collected = stage("interventions", [&] {
      return run_intervention_round(expert, policy_actor(current, c.policy.var_scale), *data.env, data.target,
                                    c.interventions.epsilon, c.interventions.window,
                                    c.interventions.episodes_per_round,
                                    rng.substream("interventions").substream(round), buffer);
    });
    RetrievalMask mask = full_mask(data.prior, 0);
    if (!collected.task.empty()) {
      DatasetStore retrieved = empty;
      if (with_retrieval) {
        RetrievalOutcome r = retrieve(c, *embedder, data.prior, collected.task);
        mask = std::move(r.mask);
        retrieved = std::move(r.retrieved);
      }
      current = stage("policy", [&] {
        SeededRng train_rng = rng.substream("policy").substream("round").substream(round);
        return train_bc(pretrained, collected.task, retrieved, bc_config(c), train_rng).policy;
      });
    }
    record(round, buffer.total(), current, mask, start);
  }
  stage("report", [&] { write_intervention_csv(out / "interventions.csv", rows); });
  return rows;
}

void write_eval_log(const fs::path& path, const EvalResult& eval) {
  std::ofstream out(path, std::ios::trunc);
  out << "episode,success,steps\n";
  for (std::size_t i = 0; i < eval.episodes.size(); ++i) {
    out << i << ',' << int(eval.episodes[i].success) << ',' << eval.episodes[i].steps_taken << '\n';
  }
}

}  // namespace bret
