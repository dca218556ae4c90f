#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bret {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { ours, task_only, mixture, ground_truth, gcbc, gcbc_ft, ours_interventions };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct VaeSection {
  std::size_t latent_dim = 16;
  std::vector<std::size_t> hidden{64, 64};
  double beta = 1e-4;
  std::size_t steps = 5000;
  std::size_t batch = 64;
  double lr = 1e-4;
};

struct PolicySection {
  std::size_t modes = 5;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t steps = 5000;
  std::size_t batch = 32;
  double lr = 1e-3;
  double var_scale = 0.1;
  double sigma_floor = 1e-4;
};

struct RetrievalSection {
  std::size_t context = 1;
  double action_scale = 1.0;
  std::vector<std::string> relevant_labels{"A"};
};

struct EnvSection {
  std::string name = "two_bins";  // two_bins | multi_task
  std::size_t n_relevant = 100;
  std::size_t n_adversarial = 100;
  std::size_t episodes_per_task = 50;  // multi_task prior, per task
  std::size_t n_task_demos = 10;
  std::size_t num_objects = 4;          // multi_task only
  std::size_t target_object = 0;
  std::size_t target_bin = 0;
  double noise_std = 0.01;
  std::size_t max_steps = 60;
  std::size_t n_eval_episodes = 50;
};

struct InterventionSection {
  double epsilon = 0.05;
  std::size_t window = 1000;
  std::size_t episodes_per_round = 10;
  std::size_t rounds = 5;
};

struct PathsSection {
  std::string prior;     // empty: generate from env
  std::string task;      // empty: generate from env
  std::string embedder;  // empty: <out>/embedder.json
  std::string policy;    // empty: <out>/policy.json
  std::string out = "out";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  double delta = 0.75;
  Method method = Method::ours;
  VaeSection vae;
  PolicySection policy;
  RetrievalSection retrieval;
  EnvSection env;
  InterventionSection interventions;
  PathsSection paths;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  std::filesystem::path out_dir() const { return paths.out; }
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// Builds a config from defaults overlaid with `doc`; unknown keys and
/// type mismatches are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when it
/// parses, otherwise taken as a string. The path must name an existing leaf.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads the optional config file, applies overrides, validates.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

}  // namespace bret
