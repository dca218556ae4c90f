#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bret/nn/rng.hpp"

namespace bret {

enum class Activation { relu, tanh, identity };

/// Fully connected network shape. `widths` runs input -> hidden... -> output;
/// `hidden[i]` is applied after layer i for every layer except the last,
/// whose output is always the identity.
struct MlpSpec {
  std::vector<std::size_t> widths;
  std::vector<Activation> hidden;

  static MlpSpec make(std::vector<std::size_t> widths, Activation hidden_activation);

  std::size_t num_layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t param_count() const;
  /// Offset of layer l's weight block inside the flat parameter vector.
  std::size_t layer_offset(std::size_t l) const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Flat parameters. Canonical order, layer by layer: the weight matrix
/// row-major as [out][in], followed by the bias vector [out].
using ParamVector = std::vector<double>;

/// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.
ParamVector init_params(const MlpSpec& spec, SeededRng& rng);

struct Mlp {
  MlpSpec spec;
  ParamVector params;
};

/// Intermediate values kept for the backward pass.
struct MlpTape {
  std::vector<std::vector<double>> pre;  // pre-activation per layer
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = output of layer l
  const std::vector<double>& output() const { return act.back(); }
};

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input);

void mlp_forward(const MlpSpec& spec, std::span<const double> params,
                 std::span<const double> input, MlpTape& tape);

/// Reverse pass over a recorded tape. Parameter gradients are accumulated
/// into `param_grad`; the input gradient is written to `input_grad` when given.
void mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpTape& tape,
                  std::span<const double> upstream, std::span<double> param_grad,
                  std::vector<double>* input_grad = nullptr);

struct MlpGradients {
  ParamVector params;
  std::vector<double> input;
};

/// Gradients of <upstream, mlp_forward(input)> with respect to parameters and input.
MlpGradients backprop(const MlpSpec& spec, std::span<const double> params,
                      std::span<const double> input, std::span<const double> upstream);

}  // namespace bret
