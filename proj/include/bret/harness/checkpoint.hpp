#pragma once

#include <filesystem>

#include "bret/embed/vae.hpp"
#include "bret/policy/gmm_policy.hpp"

namespace bret {

// Checkpoint = JSON manifest + flat little-endian float64 blob.
//
// `<name>.json` describes the model (kind, hyperparameters, normalization
// statistics) and lists parameter blocks as {name, widths, hidden, offset,
// count}; offsets and counts are in doubles. `<name>.bin` is every block's
// ParamVector concatenated in manifest order. The manifest names its blob
// file relative to its own directory.

void save_embedder(const EmbedderModel& model, const std::filesystem::path& manifest_path);
EmbedderModel load_embedder(const std::filesystem::path& manifest_path);

void save_policy(const GmmPolicy& policy, const std::filesystem::path& manifest_path);
GmmPolicy load_policy(const std::filesystem::path& manifest_path);

}  // namespace bret
