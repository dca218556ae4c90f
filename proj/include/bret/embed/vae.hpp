#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bret/data/dataset.hpp"
#include "bret/data/norm_stats.hpp"
#include "bret/nn/adam.hpp"
#include "bret/nn/mlp.hpp"
#include "bret/nn/rng.hpp"

namespace bret {

struct EmbedderConfig {
  std::size_t latent_dim = 16;
  /// (h1, h2): modality encoders are [D, h1, h1], fusion is [2*h1, h2, 2*latent],
  /// decoder is [latent, h2, h1, D_s + D_a].
  std::vector<std::size_t> hidden{64, 64};
  double beta = 1e-4;
  double action_scale = 1.0;
};

/// State-action VAE.
///
/// State and action are encoded by separate MLPs; their ReLU'd outputs are
/// concatenated and fused into (mu, logvar) of the latent posterior. The
/// decoder maps a latent sample back to [state || action] in normalized units.
struct EmbedderModel {
  Mlp state_encoder;
  Mlp action_encoder;
  Mlp fusion;
  Mlp decoder;
  std::size_t latent_dim = 0;
  double beta = 0.0;
  double action_scale = 1.0;
  NormStats norm;

  std::size_t state_dim() const { return state_encoder.spec.input_width(); }
  std::size_t action_dim() const { return action_encoder.spec.input_width(); }
  std::size_t embedding_dim() const { return latent_dim + action_dim(); }
};

EmbedderModel init_embedder(const EmbedderConfig& config, std::size_t state_dim,
                            std::size_t action_dim, NormStats norm, SeededRng& rng);

using Embedding = std::vector<double>;

/// z = [posterior mean || action_scale * normalized action]. Inputs are raw
/// environment units. Deterministic: no latent sampling.
Embedding encode(const EmbedderModel& model, std::span<const double> state,
                 std::span<const double> action);

/// KL(N(mu, exp(logvar)) || N(0, I)).
double kl_term(std::span<const double> mu, std::span<const double> logvar);

/// Negative Euclidean distance, always <= 0.
double similarity(std::span<const double> z1, std::span<const double> z2);

struct EmbedderGradients {
  ParamVector state_encoder, action_encoder, fusion, decoder;
};

struct ElboResult {
  double loss = 0.0;
  double reconstruction = 0.0;  // batch mean of 0.5*||x - x_hat||^2
  double kl = 0.0;              // batch mean of kl_term
  EmbedderGradients grad;
};

/// Negative ELBO averaged over a batch of normalized [state || action]
/// vectors, with exact gradients. One reparameterized draw per datum;
/// `noise` holds batch.size() * latent_dim standard normals, row per datum.
ElboResult elbo_loss(const EmbedderModel& model, std::span<const std::vector<double>> batch,
                     std::span<const double> noise);

/// Same, drawing the noise from rng.
ElboResult elbo_loss(const EmbedderModel& model, std::span<const std::vector<double>> batch,
                     SeededRng& rng);

struct EmbedderTrainConfig {
  std::size_t steps = 5000;
  std::size_t batch = 64;
  AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
};

struct TrainedEmbedder {
  EmbedderModel model;
  std::vector<double> loss_trace;
};

/// Fits the VAE on the prior store. Normalization statistics are computed
/// from the same store. Per step the rng draws batch indices (uniform, with
/// replacement) and then batch*latent_dim normals, in that order.
TrainedEmbedder train_embedder(const DatasetStore& prior, const EmbedderConfig& config,
                               const EmbedderTrainConfig& train, SeededRng& rng);

/// Continues training an existing model with the same draw order.
TrainedEmbedder train_embedder(EmbedderModel model, const DatasetStore& prior,
                               const EmbedderTrainConfig& train, SeededRng& rng);

}  // namespace bret
