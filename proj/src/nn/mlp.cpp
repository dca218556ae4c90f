#include "bret/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "bret/error.hpp"
#include "bret/simd/kernels.hpp"

namespace bret {
namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::identity:
      return x;
  }
  return x;
}

double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - post * post;
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

Activation layer_activation(const MlpSpec& spec, std::size_t l) {
  return l + 1 < spec.num_layers() ? spec.hidden[l] : Activation::identity;
}

}  // namespace

MlpSpec MlpSpec::make(std::vector<std::size_t> widths, Activation hidden_activation) {
  MlpSpec spec;
  const std::size_t n_hidden = widths.size() >= 2 ? widths.size() - 2 : 0;
  spec.widths = std::move(widths);
  spec.hidden.assign(n_hidden, hidden_activation);
  spec.validate();
  return spec;
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += widths[l] * widths[l + 1] + widths[l + 1];
  return n;
}

std::size_t MlpSpec::layer_offset(std::size_t l) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < l; ++i) off += widths[i] * widths[i + 1] + widths[i + 1];
  return off;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("MlpSpec: need input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("MlpSpec: zero layer width");
  }
  if (hidden.size() != widths.size() - 2) {
    throw std::invalid_argument("MlpSpec: expected " + std::to_string(widths.size() - 2) +
                                " hidden activations, got " + std::to_string(hidden.size()));
  }
}

ParamVector init_params(const MlpSpec& spec, SeededRng& rng) {
  spec.validate();
  ParamVector p(spec.param_count(), 0.0);
  std::size_t off = 0;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) p[off + i] = rng.uniform(-limit, limit);
    off += in * out + out;
  }
  return p;
}

void mlp_forward(const MlpSpec& spec, std::span<const double> params,
                 std::span<const double> input, MlpTape& tape) {
  require_dim(params.size(), spec.param_count(), "mlp parameters");
  require_dim(input.size(), spec.input_width(), "mlp input");
  const auto& k = simd::active();
  const std::size_t L = spec.num_layers();
  tape.pre.resize(L);
  tape.act.resize(L + 1);
  tape.act[0].assign(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const double* W = params.data() + off;
    const double* b = W + in * out;
    const double* x = tape.act[l].data();
    auto& z = tape.pre[l];
    auto& y = tape.act[l + 1];
    z.resize(out);
    y.resize(out);
    const Activation a = layer_activation(spec, l);
    for (std::size_t o = 0; o < out; ++o) {
      z[o] = k.dot(W + o * in, x, in) + b[o];
      y[o] = activate(a, z[o]);
    }
    off += in * out + out;
  }
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input) {
  MlpTape tape;
  mlp_forward(spec, params, input, tape);
  return std::move(tape.act.back());
}

void mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpTape& tape,
                  std::span<const double> upstream, std::span<double> param_grad,
                  std::vector<double>* input_grad) {
  require_dim(params.size(), spec.param_count(), "mlp parameters");
  require_dim(param_grad.size(), spec.param_count(), "mlp parameter gradient");
  require_dim(upstream.size(), spec.output_width(), "mlp upstream gradient");
  const auto& k = simd::active();
  const std::size_t L = spec.num_layers();

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> next;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const std::size_t off = spec.layer_offset(l);
    const double* W = params.data() + off;
    double* gW = param_grad.data() + off;
    double* gb = gW + in * out;
    const Activation a = layer_activation(spec, l);
    for (std::size_t o = 0; o < out; ++o) {
      delta[o] *= activate_grad(a, tape.pre[l][o], tape.act[l + 1][o]);
    }
    const double* x = tape.act[l].data();
    for (std::size_t o = 0; o < out; ++o) {
      if (delta[o] == 0.0) continue;
      k.axpy(delta[o], x, gW + o * in, in);
      gb[o] += delta[o];
    }
    if (l == 0 && input_grad == nullptr) break;
    next.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      if (delta[o] != 0.0) k.axpy(delta[o], W + o * in, next.data(), in);
    }
    delta.swap(next);
  }
  if (input_grad) *input_grad = std::move(delta);
}

MlpGradients backprop(const MlpSpec& spec, std::span<const double> params,
                      std::span<const double> input, std::span<const double> upstream) {
  MlpTape tape;
  mlp_forward(spec, params, input, tape);
  MlpGradients g;
  g.params.assign(spec.param_count(), 0.0);
  mlp_backward(spec, params, tape, upstream, g.params, &g.input);
  return g;
}

}  // namespace bret
