#pragma once

#include "flowbench/numeric/matrix.hpp"
#include "flowbench/numeric/rng.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowbench {

enum class Activation { relu, leaky_relu, tanh, identity };

inline constexpr double kLeakyReluSlope = 0.01;

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected layer computing x * weight + bias for row vectors x.
struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;    // fan_out
};

/// Multilayer perceptron. Hidden layers share one activation; the final
/// layer is always linear.
struct Mlp {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::relu;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }
  Index parameter_count() const;
};

/// Builds an MLP with the given layer widths (input, hidden..., output).
/// Every layer is He-uniform initialised with zero bias; when
/// `zero_last_layer` is set the output layer starts at exactly zero.
Mlp make_mlp(std::span<const Index> widths, Activation activation, Rng& rng,
             bool zero_last_layer = false);

/// Per-layer inputs and pre-activations captured during a forward pass.
struct MlpTrace {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

Matrix mlp_apply(const Mlp& net, const Matrix& x, MlpTrace* trace = nullptr);

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;
};

/// Reverse-mode gradients of <upstream, mlp_apply(net, x)> with respect to
/// every parameter and to x.
MlpGradients mlp_backprop(const Mlp& net, const MlpTrace& trace, const Matrix& upstream);
MlpGradients mlp_backprop(const Mlp& net, const Matrix& x, const Matrix& upstream);

/// A contiguous block of trainable values. `decay` marks weight matrices,
/// the only parameters AdamW shrinks.
struct ParamBlock {
  std::span<double> values;
  bool decay = false;
};

void append_parameters(Mlp& net, std::vector<ParamBlock>& out);

}  // namespace flowbench
