#include "bret/embed/vae.hpp"

#include <cmath>
#include <string>

#include "bret/error.hpp"
#include "bret/simd/kernels.hpp"

namespace bret {
namespace {

void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// Forward values for one datum, kept for the backward pass.
struct Pass {
  MlpTape state_tape, action_tape, fusion_tape, decoder_tape;
  std::vector<double> fused_input;
  std::vector<double> z;
};

void encode_posterior(const EmbedderModel& m, std::span<const double> s_norm,
                      std::span<const double> a_norm, Pass& p) {
  mlp_forward(m.state_encoder.spec, m.state_encoder.params, s_norm, p.state_tape);
  mlp_forward(m.action_encoder.spec, m.action_encoder.params, a_norm, p.action_tape);
  p.fused_input = p.state_tape.output();
  relu_inplace(p.fused_input);
  const auto& ha = p.action_tape.output();
  for (double v : ha) p.fused_input.push_back(v > 0.0 ? v : 0.0);
  mlp_forward(m.fusion.spec, m.fusion.params, p.fused_input, p.fusion_tape);
}

}  // namespace

EmbedderModel init_embedder(const EmbedderConfig& config, std::size_t state_dim,
                            std::size_t action_dim, NormStats norm, SeededRng& rng) {
  if (config.latent_dim == 0) throw std::invalid_argument("latent_dim must be positive");
  if (config.hidden.size() != 2) throw std::invalid_argument("embedder hidden widths must be (h1, h2)");
  if (config.beta < 0.0) throw std::invalid_argument("beta must be non-negative");
  if (!(config.action_scale >= 0.0)) throw std::invalid_argument("action_scale must be non-negative");
  require_dim(norm.state_mean.size(), state_dim, "norm stats state");
  require_dim(norm.action_mean.size(), action_dim, "norm stats action");
  const std::size_t h1 = config.hidden[0], h2 = config.hidden[1];
  EmbedderModel m;
  m.state_encoder.spec = MlpSpec::make({state_dim, h1, h1}, Activation::relu);
  m.action_encoder.spec = MlpSpec::make({action_dim, h1, h1}, Activation::relu);
  m.fusion.spec = MlpSpec::make({2 * h1, h2, 2 * config.latent_dim}, Activation::relu);
  m.decoder.spec = MlpSpec::make({config.latent_dim, h2, h1, state_dim + action_dim}, Activation::relu);
  m.state_encoder.params = init_params(m.state_encoder.spec, rng);
  m.action_encoder.params = init_params(m.action_encoder.spec, rng);
  m.fusion.params = init_params(m.fusion.spec, rng);
  m.decoder.params = init_params(m.decoder.spec, rng);
  m.latent_dim = config.latent_dim;
  m.beta = config.beta;
  m.action_scale = config.action_scale;
  m.norm = std::move(norm);
  return m;
}

Embedding encode(const EmbedderModel& model, std::span<const double> state,
                 std::span<const double> action) {
  require_dim(state.size(), model.state_dim(), "encode state");
  require_dim(action.size(), model.action_dim(), "encode action");
  for (double v : state) {
    if (!std::isfinite(v)) throw std::invalid_argument("encode: non-finite state");
  }
  for (double v : action) {
    if (!std::isfinite(v)) throw std::invalid_argument("encode: non-finite action");
  }
  const auto s = model.norm.normalize_state(state);
  const auto a = model.norm.normalize_action(action);
  Pass p;
  encode_posterior(model, s, a, p);
  const auto& out = p.fusion_tape.output();
  Embedding z(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(model.latent_dim));
  for (double v : a) z.push_back(model.action_scale * v);
  return z;
}

double kl_term(std::span<const double> mu, std::span<const double> logvar) {
  require_dim(logvar.size(), mu.size(), "kl logvar");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    kl += mu[i] * mu[i] + std::exp(logvar[i]) - 1.0 - logvar[i];
  }
  return 0.5 * kl;
}

double similarity(std::span<const double> z1, std::span<const double> z2) {
  require_dim(z2.size(), z1.size(), "similarity");
  return -std::sqrt(simd::squared_distance(z1.data(), z2.data(), z1.size()));
}

ElboResult elbo_loss(const EmbedderModel& model, std::span<const std::vector<double>> batch,
                     std::span<const double> noise) {
  if (batch.empty()) throw std::invalid_argument("elbo_loss: empty batch");
  const std::size_t L = model.latent_dim;
  const std::size_t ds = model.state_dim(), da = model.action_dim();
  require_dim(noise.size(), batch.size() * L, "elbo noise");

  ElboResult r;
  r.grad.state_encoder.assign(model.state_encoder.params.size(), 0.0);
  r.grad.action_encoder.assign(model.action_encoder.params.size(), 0.0);
  r.grad.fusion.assign(model.fusion.params.size(), 0.0);
  r.grad.decoder.assign(model.decoder.params.size(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Pass p;
  std::vector<double> g_xhat(ds + da), g_fusion(2 * L), g_fused_in, g_dec_in;
  std::vector<double> g_state(ds ? model.state_encoder.spec.output_width() : 0);
  std::vector<double> g_action;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& x = batch[n];
    require_dim(x.size(), ds + da, "elbo datum");
    const std::span<const double> xs(x.data(), ds), xa(x.data() + ds, da);
    encode_posterior(model, xs, xa, p);
    const auto& post = p.fusion_tape.output();
    const double* mu = post.data();
    const double* logvar = post.data() + L;
    const double* eps = noise.data() + n * L;

    p.z.resize(L);
    for (std::size_t i = 0; i < L; ++i) p.z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
    mlp_forward(model.decoder.spec, model.decoder.params, p.z, p.decoder_tape);
    const auto& xhat = p.decoder_tape.output();

    double rec = 0.0;
    for (std::size_t i = 0; i < ds + da; ++i) {
      const double d = xhat[i] - x[i];
      rec += 0.5 * d * d;
      g_xhat[i] = d * inv_n;
    }
    const double kl = kl_term({mu, L}, {logvar, L});
    r.reconstruction += rec * inv_n;
    r.kl += kl * inv_n;

    mlp_backward(model.decoder.spec, model.decoder.params, p.decoder_tape, g_xhat, r.grad.decoder,
                 &g_dec_in);
    for (std::size_t i = 0; i < L; ++i) {
      const double sd = std::exp(0.5 * logvar[i]);
      g_fusion[i] = g_dec_in[i] + model.beta * mu[i] * inv_n;
      g_fusion[L + i] = g_dec_in[i] * eps[i] * 0.5 * sd +
                        model.beta * 0.5 * (std::exp(logvar[i]) - 1.0) * inv_n;
    }
    mlp_backward(model.fusion.spec, model.fusion.params, p.fusion_tape, g_fusion, r.grad.fusion,
                 &g_fused_in);

    const std::size_t hs = model.state_encoder.spec.output_width();
    const std::size_t ha = model.action_encoder.spec.output_width();
    g_state.assign(g_fused_in.begin(), g_fused_in.begin() + static_cast<std::ptrdiff_t>(hs));
    g_action.assign(g_fused_in.begin() + static_cast<std::ptrdiff_t>(hs), g_fused_in.end());
    const auto& so = p.state_tape.output();
    const auto& ao = p.action_tape.output();
    for (std::size_t i = 0; i < hs; ++i) g_state[i] = so[i] > 0.0 ? g_state[i] : 0.0;
    for (std::size_t i = 0; i < ha; ++i) g_action[i] = ao[i] > 0.0 ? g_action[i] : 0.0;
    mlp_backward(model.state_encoder.spec, model.state_encoder.params, p.state_tape, g_state,
                 r.grad.state_encoder);
    mlp_backward(model.action_encoder.spec, model.action_encoder.params, p.action_tape, g_action,
                 r.grad.action_encoder);
  }
  r.loss = r.reconstruction + model.beta * r.kl;
  return r;
}

ElboResult elbo_loss(const EmbedderModel& model, std::span<const std::vector<double>> batch,
                     SeededRng& rng) {
  const auto noise = standard_normal(rng, batch.size() * model.latent_dim);
  return elbo_loss(model, batch, noise);
}

TrainedEmbedder train_embedder(EmbedderModel model, const DatasetStore& prior,
                               const EmbedderTrainConfig& train, SeededRng& rng) {
  if (prior.empty()) throw DataError("train_embedder: empty prior store");
  if (train.steps > 0 && train.batch == 0) throw std::invalid_argument("vae batch must be positive");
  require_dim(prior.state_dim(), model.state_dim(), "prior state");
  require_dim(prior.action_dim(), model.action_dim(), "prior action");

  std::vector<std::vector<double>> data;
  data.reserve(prior.size());
  for (const Transition& tr : prior.transitions()) {
    auto x = model.norm.normalize_state(tr.state);
    const auto a = model.norm.normalize_action(tr.action);
    x.insert(x.end(), a.begin(), a.end());
    data.push_back(std::move(x));
  }

  AdamState opt_s(model.state_encoder.params.size(), train.adam);
  AdamState opt_a(model.action_encoder.params.size(), train.adam);
  AdamState opt_f(model.fusion.params.size(), train.adam);
  AdamState opt_d(model.decoder.params.size(), train.adam);

  TrainedEmbedder out;
  out.loss_trace.reserve(train.steps);
  std::vector<std::vector<double>> batch(train.batch);
  for (std::size_t step = 0; step < train.steps; ++step) {
    for (auto& b : batch) b = data[rng.index(data.size())];
    const ElboResult r = elbo_loss(model, batch, rng);
    if (!std::isfinite(r.loss)) {
      throw NumericError("train_embedder: non-finite loss at step " + std::to_string(step) +
                         " (reconstruction " + std::to_string(r.reconstruction) + ", kl " +
                         std::to_string(r.kl) + ")");
    }
    out.loss_trace.push_back(r.loss);
    adam_step(opt_s, model.state_encoder.params, r.grad.state_encoder);
    adam_step(opt_a, model.action_encoder.params, r.grad.action_encoder);
    adam_step(opt_f, model.fusion.params, r.grad.fusion);
    adam_step(opt_d, model.decoder.params, r.grad.decoder);
  }
  out.model = std::move(model);
  return out;
}

TrainedEmbedder train_embedder(const DatasetStore& prior, const EmbedderConfig& config,
                               const EmbedderTrainConfig& train, SeededRng& rng) {
  if (prior.empty()) throw DataError("train_embedder: empty prior store");
  SeededRng init_rng = rng.substream("init");
  EmbedderModel model = init_embedder(config, prior.state_dim(), prior.action_dim(),
                                      compute_norm_stats(prior), init_rng);
  return train_embedder(std::move(model), prior, train, rng);
}

}  // namespace bret
