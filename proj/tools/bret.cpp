// Command-line front end for the retrieval experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bret/error.hpp"
#include "bret/harness/checkpoint.hpp"
#include "bret/harness/config.hpp"
#include "bret/harness/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bret;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "Root seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--set", f.overrides, "Override a config leaf, key.path=value")->take_all();
}

ExperimentConfig resolve(const CommonFlags& f) {
  std::vector<std::string> ov = f.overrides;
  if (f.seed) ov.push_back("seed=" + std::to_string(*f.seed));
  if (!f.out.empty()) ov.push_back("paths.out=\"" + f.out + "\"");
  return load_config(f.config, ov);
}

fs::path embedder_path(const ExperimentConfig& c) {
  return c.paths.embedder.empty() ? c.out_dir() / "embedder.json" : fs::path(c.paths.embedder);
}

fs::path policy_path(const ExperimentConfig& c) {
  return c.paths.policy.empty() ? c.out_dir() / "policy.json" : fs::path(c.paths.policy);
}

void print_rows(const std::vector<MetricsRow>& rows) {
  std::cout << kMetricsHeader << '\n';
  for (const auto& r : rows) std::cout << format_metrics_row(r) << '\n';
}

int cmd_gen_data(const ExperimentConfig& c) {
  fs::create_directories(c.out_dir());
  const ExperimentData d = prepare_data(c);
  save_dataset(d.prior, c.out_dir() / "prior.jsonl");
  save_dataset(d.task, c.out_dir() / "task.jsonl");
  std::cout << "prior: " << d.prior.episodes().size() << " episodes, " << d.prior.size() << " transitions\n"
            << "task: " << d.task.episodes().size() << " episodes, " << d.task.size() << " transitions\n";
  return 0;
}

int cmd_train_embedder(const ExperimentConfig& c) {
  fs::create_directories(c.out_dir());
  const ExperimentData d = prepare_data(c);
  const TrainedEmbedder emb = fit_embedder(c, d.prior);
  save_embedder(emb.model, embedder_path(c));
  if (!emb.loss_trace.empty()) std::cout << "final elbo: " << emb.loss_trace.back() << '\n';
  return 0;
}

int cmd_retrieve(const ExperimentConfig& c) {
  fs::create_directories(c.out_dir());
  const ExperimentData d = prepare_data(c);
  const EmbedderModel model = load_embedder(embedder_path(c));
  const RetrievalOutcome r = retrieve(c, model, d.prior, d.task);
  std::ofstream csv(c.out_dir() / "scores.csv", std::ios::trunc);
  write_score_csv(csv, r.table, r.mask, d.prior);
  save_dataset(r.retrieved, c.out_dir() / "retrieved.jsonl");
  std::cout << "retrieved " << r.mask.count() << " of " << d.prior.size() << " transitions\n";
  return 0;
}

int cmd_train_policy(const ExperimentConfig& c) {
  fs::create_directories(c.out_dir());
  const ExperimentData d = prepare_data(c);
  DatasetStore retrieved(d.prior.manifest(), DatasetRole::retrieved);
  if (c.method == Method::ours) {
    const fs::path p = c.out_dir() / "retrieved.jsonl";
    if (!fs::exists(p)) throw StageError("policy", "missing " + p.string() + "; run retrieve first");
    retrieved = load_dataset(p, DatasetRole::retrieved);
  } else if (c.method == Method::ground_truth) {
    retrieved = build_retrieved(d.prior, ground_truth_mask(c, d.prior));
  }
  const BcResult bc = fit_policy(c, c.method, d.prior, d.task, retrieved);
  save_policy(bc.policy, policy_path(c));
  if (!bc.loss_trace.empty()) std::cout << "final nll: " << bc.loss_trace.back() << '\n';
  return 0;
}

int cmd_evaluate(const ExperimentConfig& c) {
  const ExperimentData d = prepare_data(c);
  const GmmPolicy policy = load_policy(policy_path(c));
  const EvalResult e = evaluate_policy(c, *d.env, d.target, policy, d.task);
  fs::create_directories(c.out_dir());
  write_eval_log(c.out_dir() / "eval.csv", e);
  std::cout << "success_rate " << e.success_rate << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prior-data retrieval for imitation learning"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::vector<double> deltas{0.1, 0.3, 0.5, 0.75, 0.95};
  std::optional<std::size_t> rounds;

  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"gen-data", "Generate prior and task datasets"},
      {"train-embedder", "Train the state-action embedder on the prior"},
      {"retrieve", "Score and threshold the prior against the task data"},
      {"train-policy", "Train the policy for the configured method"},
      {"evaluate", "Roll out a trained policy"},
      {"pipeline", "Run the full method end to end"},
      {"sweep-delta", "Train one policy per retrieval threshold"},
      {"separation", "Export per-timestep score curves by label"},
      {"interventions", "Run the online intervention experiment"},
  };
  std::vector<CLI::App*> cmds;
  for (const auto& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, flags);
    cmds.push_back(cmd);
  }
  cmds[6]->add_option("--deltas", deltas, "Thresholds to sweep")->delimiter(',');
  cmds[8]->add_option("--rounds", rounds, "Intervention rounds (default from config)");

  CLI11_PARSE(app, argc, argv);

  std::string active = "cli";
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (cmds[i]->parsed()) active = entries[i].name;
  }
  try {
    const ExperimentConfig c = resolve(flags);
    if (cmds[0]->parsed()) return cmd_gen_data(c);
    if (cmds[1]->parsed()) return cmd_train_embedder(c);
    if (cmds[2]->parsed()) return cmd_retrieve(c);
    if (cmds[3]->parsed()) return cmd_train_policy(c);
    if (cmds[4]->parsed()) return cmd_evaluate(c);
    if (cmds[5]->parsed()) {
      print_rows({run_pipeline(c)});
      return 0;
    }
    if (cmds[6]->parsed()) {
      print_rows(run_delta_sweep(c, deltas));
      return 0;
    }
    if (cmds[7]->parsed()) {
      const auto curves = export_separation(c);
      std::cout << "wrote " << curves.size() << " rows to " << (c.out_dir() / "separation.csv").string() << '\n';
      return 0;
    }
    if (cmds[8]->parsed()) {
      const auto rows = run_intervention_experiment(c, rounds.value_or(c.interventions.rounds));
      std::cout << kInterventionHeader << '\n';
      for (const auto& r : rows) {
        std::cout << r.round << ',' << r.cumulative_interventions << ',' << format_metrics_row(r.metrics) << '\n';
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "[config] " << e.what() << '\n';
    return 2;
  } catch (const StageError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "[" << active << "] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
