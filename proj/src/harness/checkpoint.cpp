#include "bret/harness/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

#include "bret/error.hpp"

namespace bret {
namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw DataError("checkpoint: unknown activation '" + s + "'");
}

ojson norm_to_json(const NormStats& n) {
  ojson j;
  j["state_mean"] = n.state_mean;
  j["state_std"] = n.state_std;
  j["action_mean"] = n.action_mean;
  j["action_std"] = n.action_std;
  j["std_floor"] = n.std_floor;
  return j;
}

NormStats norm_from_json(const json& j) {
  NormStats n;
  n.state_mean = j.at("state_mean").get<std::vector<double>>();
  n.state_std = j.at("state_std").get<std::vector<double>>();
  n.action_mean = j.at("action_mean").get<std::vector<double>>();
  n.action_std = j.at("action_std").get<std::vector<double>>();
  n.std_floor = j.at("std_floor").get<double>();
  return n;
}

class BlobWriter {
 public:
  ojson add(const char* name, const Mlp& mlp) {
    ojson b;
    b["name"] = name;
    b["widths"] = mlp.spec.widths;
    std::vector<std::string> hidden;
    for (Activation a : mlp.spec.hidden) hidden.emplace_back(activation_name(a));
    b["hidden"] = hidden;
    b["offset"] = values_.size();
    b["count"] = mlp.params.size();
    values_.insert(values_.end(), mlp.params.begin(), mlp.params.end());
    return b;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (double v : values_) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(bytes, 8);
    }
    if (!out) throw DataError("write failed for " + path.string());
  }

 private:
  std::vector<double> values_;
};

std::vector<double> read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint blob " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) throw DataError("checkpoint blob size is not a multiple of 8: " + path.string());
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * k + i])) << (8 * i);
    }
    out[k] = std::bit_cast<double>(bits);
  }
  return out;
}

Mlp read_block(const json& manifest, const std::vector<double>& blob, const std::string& name) {
  for (const auto& b : manifest.at("blocks")) {
    if (b.at("name").get<std::string>() != name) continue;
    Mlp m;
    m.spec.widths = b.at("widths").get<std::vector<std::size_t>>();
    for (const auto& h : b.at("hidden")) m.spec.hidden.push_back(parse_activation(h.get<std::string>()));
    m.spec.validate();
    const auto offset = b.at("offset").get<std::size_t>();
    const auto count = b.at("count").get<std::size_t>();
    if (count != m.spec.param_count() || offset + count > blob.size()) {
      throw DataError("checkpoint: block '" + name + "' does not match its shape or the blob size");
    }
    m.params.assign(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                    blob.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return m;
  }
  throw DataError("checkpoint: missing block '" + name + "'");
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  return p.replace_extension(".bin");
}

void write_manifest(const ojson& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_manifest(const std::filesystem::path& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (j.value("format", "") != "bret-checkpoint" || j.value("version", 0) != 1) {
    throw DataError("checkpoint: unrecognized format in " + path.string());
  }
  if (j.value("kind", "") != kind) {
    throw DataError(std::string("checkpoint: expected kind '") + kind + "' in " + path.string());
  }
  return j;
}

ojson header(const char* kind, const std::filesystem::path& manifest_path) {
  ojson j;
  j["format"] = "bret-checkpoint";
  j["version"] = 1;
  j["kind"] = kind;
  j["blob"] = blob_path_for(manifest_path).filename().string();
  return j;
}

}  // namespace

void save_embedder(const EmbedderModel& model, const std::filesystem::path& manifest_path) {
  ojson j = header("embedder", manifest_path);
  j["latent_dim"] = model.latent_dim;
  j["beta"] = model.beta;
  j["action_scale"] = model.action_scale;
  j["norm"] = norm_to_json(model.norm);
  BlobWriter blob;
  j["blocks"] = ojson::array({blob.add("state_encoder", model.state_encoder),
                              blob.add("action_encoder", model.action_encoder),
                              blob.add("fusion", model.fusion), blob.add("decoder", model.decoder)});
  write_manifest(j, manifest_path);
  blob.write(blob_path_for(manifest_path));
}

EmbedderModel load_embedder(const std::filesystem::path& manifest_path) {
  const json j = read_manifest(manifest_path, "embedder");
  try {
    const auto blob = read_blob(manifest_path.parent_path() / j.at("blob").get<std::string>());
    EmbedderModel m;
    m.state_encoder = read_block(j, blob, "state_encoder");
    m.action_encoder = read_block(j, blob, "action_encoder");
    m.fusion = read_block(j, blob, "fusion");
    m.decoder = read_block(j, blob, "decoder");
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.beta = j.at("beta").get<double>();
    m.action_scale = j.at("action_scale").get<double>();
    m.norm = norm_from_json(j.at("norm"));
    if (m.fusion.spec.output_width() != 2 * m.latent_dim) {
      throw DataError("checkpoint: fusion width does not match latent_dim");
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_policy(const GmmPolicy& policy, const std::filesystem::path& manifest_path) {
  ojson j = header("policy", manifest_path);
  j["modes"] = policy.modes;
  j["state_dim"] = policy.state_dim;
  j["action_dim"] = policy.action_dim;
  j["sigma_floor"] = policy.sigma_floor;
  j["goal_conditioned"] = policy.goal_conditioned;
  j["norm"] = norm_to_json(policy.norm);
  BlobWriter blob;
  j["blocks"] = ojson::array({blob.add("trunk", policy.trunk), blob.add("head", policy.head)});
  write_manifest(j, manifest_path);
  blob.write(blob_path_for(manifest_path));
}

GmmPolicy load_policy(const std::filesystem::path& manifest_path) {
  const json j = read_manifest(manifest_path, "policy");
  try {
    const auto blob = read_blob(manifest_path.parent_path() / j.at("blob").get<std::string>());
    GmmPolicy p;
    p.trunk = read_block(j, blob, "trunk");
    p.head = read_block(j, blob, "head");
    p.modes = j.at("modes").get<std::size_t>();
    p.state_dim = j.at("state_dim").get<std::size_t>();
    p.action_dim = j.at("action_dim").get<std::size_t>();
    p.sigma_floor = j.at("sigma_floor").get<double>();
    p.goal_conditioned = j.at("goal_conditioned").get<bool>();
    p.norm = norm_from_json(j.at("norm"));
    if (p.head.spec.output_width() != gmm_raw_width(p.modes, p.action_dim)) {
      throw DataError("checkpoint: head width does not match modes and action_dim");
    }
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace bret
