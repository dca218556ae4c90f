#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bret/data/dataset.hpp"
#include "bret/error.hpp"

namespace bret {
namespace {

using nlohmann::json;

std::vector<double> read_vector(const json& j, const char* key, std::size_t want, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw DataError(std::string("missing array '") + key + "'", line);
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw DataError(std::string("non-numeric entry in '") + key + "'", line);
    out.push_back(v.get<double>());
  }
  if (out.size() != want) {
    throw DataError(std::string(key) + " has " + std::to_string(out.size()) +
                        " entries, manifest says " + std::to_string(want),
                    line);
  }
  return out;
}

std::uint64_t read_index(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw DataError(std::string("missing or negative integer '") + key + "'", line);
  }
  return it->get<std::uint64_t>();
}

}  // namespace

DatasetStore load_dataset(const std::filesystem::path& path, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::string text;
  std::size_t line_no = 0;
  auto parse = [&](std::size_t line) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
  };

  if (!std::getline(in, text)) throw DataError("missing manifest line", 1);
  line_no = 1;
  const json header = parse(line_no);
  Manifest manifest;
  try {
    manifest.version = header.at("version").get<int>();
    manifest.state_dim = header.at("state_dim").get<std::size_t>();
    manifest.action_dim = header.at("action_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid manifest: ") + e.what(), line_no);
  }
  if (manifest.version != 1) {
    throw DataError("unsupported dataset version " + std::to_string(manifest.version), line_no);
  }

  DatasetStore store(manifest, role);
  std::vector<Transition> episode;
  std::size_t episode_line = 0;
  auto flush = [&] {
    if (episode.empty()) return;
    try {
      store.append_episode(std::move(episode));
    } catch (const DataError& e) {
      throw DataError(e.what(), episode_line);
    }
    episode.clear();
  };

  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const json rec = parse(line_no);
    if (!rec.is_object()) throw DataError("record is not a JSON object", line_no);
    Transition tr;
    tr.episode_id = read_index(rec, "episode", line_no);
    tr.t = read_index(rec, "t", line_no);
    tr.state = read_vector(rec, "state", manifest.state_dim, line_no);
    tr.action = read_vector(rec, "action", manifest.action_dim, line_no);
    if (auto it = rec.find("task_label"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError("task_label must be a string or null", line_no);
      tr.task_label = it->get<std::string>();
    }

    if (!episode.empty() && tr.episode_id != episode.front().episode_id) flush();
    if (episode.empty()) {
      episode_line = line_no;
    } else {
      const Transition& prev = episode.back();
      const bool ok = role == DatasetRole::retrieved ? tr.t > prev.t : tr.t == prev.t + 1;
      if (!ok) {
        throw DataError("non-consecutive timestep t=" + std::to_string(tr.t) + " after t=" +
                            std::to_string(prev.t) + " in episode " +
                            std::to_string(tr.episode_id),
                        line_no);
      }
      if (tr.task_label != prev.task_label) {
        throw DataError("task_label changes within episode " + std::to_string(tr.episode_id),
                        line_no);
      }
    }
    if (episode.empty() && role != DatasetRole::retrieved && tr.t != 0) {
      throw DataError("episode " + std::to_string(tr.episode_id) + " does not start at t=0",
                      line_no);
    }
    episode.push_back(std::move(tr));
  }
  flush();
  return store;
}

void save_dataset(const DatasetStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset file " + path.string());
  nlohmann::ordered_json header;
  header["version"] = store.manifest().version;
  header["state_dim"] = store.state_dim();
  header["action_dim"] = store.action_dim();
  out << header.dump() << '\n';
  for (const Transition& tr : store.transitions()) {
    nlohmann::ordered_json rec;
    rec["episode"] = tr.episode_id;
    rec["t"] = tr.t;
    rec["state"] = tr.state;
    rec["action"] = tr.action;
    if (tr.task_label) {
      rec["task_label"] = *tr.task_label;
    } else {
      rec["task_label"] = nullptr;
    }
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace bret
