#include "bret/harness/config.hpp"

#include <fstream>
#include <type_traits>

namespace bret {
namespace {

using nlohmann::json;

void merge_checked(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if constexpr (std::is_unsigned_v<T>) {
    if (!j.at(key).is_number_unsigned()) {
      throw ConfigError("config: '" + (section.empty() ? "" : section + ".") + key +
                        "' must be a non-negative integer");
    }
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + (section.empty() ? "" : section + ".") + key +
                      "': " + j.at(key).dump());
  }
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ours: return "ours";
    case Method::task_only: return "task_only";
    case Method::mixture: return "mixture";
    case Method::ground_truth: return "ground_truth";
    case Method::gcbc: return "gcbc";
    case Method::gcbc_ft: return "gcbc_ft";
    case Method::ours_interventions: return "ours_interventions";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::ours, Method::task_only, Method::mixture, Method::ground_truth,
                   Method::gcbc, Method::gcbc_ft, Method::ours_interventions}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("config: unknown method '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["delta"] = c.delta;
  j["method"] = std::string(method_name(c.method));
  j["vae"] = {{"latent_dim", c.vae.latent_dim}, {"hidden", c.vae.hidden}, {"beta", c.vae.beta},
              {"steps", c.vae.steps}, {"batch", c.vae.batch}, {"lr", c.vae.lr}};
  j["policy"] = {{"modes", c.policy.modes}, {"hidden", c.policy.hidden},
                 {"steps", c.policy.steps}, {"batch", c.policy.batch}, {"lr", c.policy.lr},
                 {"var_scale", c.policy.var_scale}, {"sigma_floor", c.policy.sigma_floor}};
  j["retrieval"] = {{"context", c.retrieval.context}, {"action_scale", c.retrieval.action_scale},
                    {"relevant_labels", c.retrieval.relevant_labels}};
  j["env"] = {{"name", c.env.name}, {"n_relevant", c.env.n_relevant},
              {"n_adversarial", c.env.n_adversarial}, {"episodes_per_task", c.env.episodes_per_task},
              {"n_task_demos", c.env.n_task_demos}, {"num_objects", c.env.num_objects},
              {"target_object", c.env.target_object}, {"target_bin", c.env.target_bin},
              {"noise_std", c.env.noise_std}, {"max_steps", c.env.max_steps},
              {"n_eval_episodes", c.env.n_eval_episodes}};
  j["interventions"] = {{"epsilon", c.interventions.epsilon}, {"window", c.interventions.window},
                        {"episodes_per_round", c.interventions.episodes_per_round},
                        {"rounds", c.interventions.rounds}};
  j["paths"] = {{"prior", c.paths.prior}, {"task", c.paths.task}, {"embedder", c.paths.embedder},
                {"policy", c.paths.policy}, {"out", c.paths.out}};
  return j;
}

ExperimentConfig config_from_json(const json& doc) {
  json merged = json::parse(to_json(ExperimentConfig{}).dump());
  merge_checked(merged, doc, "");

  ExperimentConfig c;
  read(merged, "seed", c.seed, "");
  read(merged, "delta", c.delta, "");
  std::string method;
  read(merged, "method", method, "");
  c.method = parse_method(method);

  const json& v = merged["vae"];
  read(v, "latent_dim", c.vae.latent_dim, "vae");
  read(v, "hidden", c.vae.hidden, "vae");
  read(v, "beta", c.vae.beta, "vae");
  read(v, "steps", c.vae.steps, "vae");
  read(v, "batch", c.vae.batch, "vae");
  read(v, "lr", c.vae.lr, "vae");

  const json& p = merged["policy"];
  read(p, "modes", c.policy.modes, "policy");
  read(p, "hidden", c.policy.hidden, "policy");
  read(p, "steps", c.policy.steps, "policy");
  read(p, "batch", c.policy.batch, "policy");
  read(p, "lr", c.policy.lr, "policy");
  read(p, "var_scale", c.policy.var_scale, "policy");
  read(p, "sigma_floor", c.policy.sigma_floor, "policy");

  const json& r = merged["retrieval"];
  read(r, "context", c.retrieval.context, "retrieval");
  read(r, "action_scale", c.retrieval.action_scale, "retrieval");
  read(r, "relevant_labels", c.retrieval.relevant_labels, "retrieval");

  const json& e = merged["env"];
  read(e, "name", c.env.name, "env");
  read(e, "n_relevant", c.env.n_relevant, "env");
  read(e, "n_adversarial", c.env.n_adversarial, "env");
  read(e, "episodes_per_task", c.env.episodes_per_task, "env");
  read(e, "n_task_demos", c.env.n_task_demos, "env");
  read(e, "num_objects", c.env.num_objects, "env");
  read(e, "target_object", c.env.target_object, "env");
  read(e, "target_bin", c.env.target_bin, "env");
  read(e, "noise_std", c.env.noise_std, "env");
  read(e, "max_steps", c.env.max_steps, "env");
  read(e, "n_eval_episodes", c.env.n_eval_episodes, "env");

  const json& iv = merged["interventions"];
  read(iv, "epsilon", c.interventions.epsilon, "interventions");
  read(iv, "window", c.interventions.window, "interventions");
  read(iv, "episodes_per_round", c.interventions.episodes_per_round, "interventions");
  read(iv, "rounds", c.interventions.rounds, "interventions");

  const json& pa = merged["paths"];
  read(pa, "prior", c.paths.prior, "paths");
  read(pa, "task", c.paths.task, "paths");
  read(pa, "embedder", c.paths.embedder, "paths");
  read(pa, "policy", c.paths.policy, "paths");
  read(pa, "out", c.paths.out, "paths");

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (!(delta >= 0.0 && delta <= 1.0)) fail("delta must lie in [0, 1]");
  if (vae.latent_dim == 0) fail("vae.latent_dim must be positive");
  if (vae.hidden.size() != 2 || vae.hidden[0] == 0 || vae.hidden[1] == 0) fail("vae.hidden must be two positive widths");
  if (!(vae.beta >= 0.0)) fail("vae.beta must be non-negative");
  if (vae.batch == 0) fail("vae.batch must be positive");
  if (!(vae.lr > 0.0)) fail("vae.lr must be positive");
  if (policy.modes == 0) fail("policy.modes must be positive");
  if (policy.hidden.empty()) fail("policy.hidden must be non-empty");
  for (auto w : policy.hidden) {
    if (w == 0) fail("policy.hidden widths must be positive");
  }
  if (policy.batch == 0) fail("policy.batch must be positive");
  if (!(policy.lr > 0.0)) fail("policy.lr must be positive");
  if (!(policy.var_scale >= 0.0)) fail("policy.var_scale must be non-negative");
  if (!(policy.sigma_floor > 0.0)) fail("policy.sigma_floor must be positive");
  if (retrieval.context == 0) fail("retrieval.context must be positive");
  if (!(retrieval.action_scale >= 0.0)) fail("retrieval.action_scale must be non-negative");
  if (env.name != "two_bins" && env.name != "multi_task") fail("env.name must be two_bins or multi_task");
  if (env.name == "multi_task" && env.num_objects < 2) fail("env.num_objects must be at least 2");
  if (env.target_bin > 1) fail("env.target_bin must be 0 or 1");
  if (env.name == "multi_task" && env.target_object >= env.num_objects) fail("env.target_object out of range");
  if (env.name == "two_bins" && env.target_object != 0) fail("env.target_object must be 0 for two_bins");
  if (!(env.noise_std >= 0.0)) fail("env.noise_std must be non-negative");
  if (env.max_steps == 0) fail("env.max_steps must be positive");
  if (!(interventions.epsilon >= 0.0)) fail("interventions.epsilon must be non-negative");
  if (interventions.window == 0) fail("interventions.window must be positive");
  if (paths.out.empty()) fail("paths.out must be set");
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  // Validate the path against the full default schema, then write into doc.
  const json schema = json::parse(to_json(ExperimentConfig{}).dump());
  const json* node = &schema;
  json* target = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    node = &(*node)[key];
    if (!target->is_object()) *target = json::object();
    if (dot == std::string::npos) {
      if (node->is_object()) throw ConfigError("config: '" + path + "' is a section, not a value");
      (*target)[key] = value;
      return;
    }
    target = &(*target)[key];
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace bret
