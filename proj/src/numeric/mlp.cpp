#include "flowbench/numeric/mlp.hpp"

#include "flowbench/error.hpp"

#include <cmath>

namespace flowbench {
namespace {

void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::relu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::leaky_relu:
      m = m.unaryExpr([](double v) { return v > 0.0 ? v : kLeakyReluSlope * v; });
      break;
    case Activation::tanh:
      m = m.array().tanh().matrix();
      break;
    case Activation::identity:
      break;
  }
}

// Multiplies g in place by the activation derivative evaluated at `pre`.
void scale_by_derivative(Matrix& g, const Matrix& pre, Activation a) {
  switch (a) {
    case Activation::relu:
      g = (pre.array() > 0.0).select(g, 0.0);
      break;
    case Activation::leaky_relu:
      g = (pre.array() > 0.0).select(g, kLeakyReluSlope * g);
      break;
    case Activation::tanh:
      g = (g.array() * (1.0 - pre.array().tanh().square())).matrix();
      break;
    case Activation::identity:
      break;
  }
}

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Index Mlp::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Mlp make_mlp(std::span<const Index> widths, Activation activation, Rng& rng, bool zero_last_layer) {
  if (widths.size() < 2) throw InvalidArgument("make_mlp needs at least input and output widths");
  Mlp net;
  net.activation = activation;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Index fan_in = widths[i];
    const Index fan_out = widths[i + 1];
    if (fan_in < 1 || fan_out < 1) throw InvalidArgument("make_mlp: layer widths must be positive");
    DenseLayer layer{Matrix::Zero(fan_in, fan_out), Vector::Zero(fan_out)};
    const bool last = i + 2 == widths.size();
    if (!(last && zero_last_layer)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (Index r = 0; r < fan_in; ++r)
        for (Index c = 0; c < fan_out; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix mlp_apply(const Mlp& net, const Matrix& x, MlpTrace* trace) {
  if (net.layers.empty()) throw InvalidArgument("mlp_apply on an empty network");
  if (x.cols() != net.input_dim())
    throw DimMismatch("mlp_apply: input has " + std::to_string(x.cols()) + " columns, network expects " +
                      std::to_string(net.input_dim()));
  if (trace) {
    trace->inputs.clear();
    trace->pre_activations.clear();
  }
  Matrix h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    Matrix pre = h * layer.weight;
    pre.rowwise() += layer.bias.transpose();
    if (trace) trace->inputs.push_back(std::move(h));
    const bool last = i + 1 == net.layers.size();
    h = pre;
    if (!last) apply_activation(h, net.activation);
    if (trace) trace->pre_activations.push_back(std::move(pre));
  }
  return h;
}

MlpGradients mlp_backprop(const Mlp& net, const MlpTrace& trace, const Matrix& upstream) {
  const std::size_t n_layers = net.layers.size();
  if (trace.inputs.size() != n_layers) throw InvalidArgument("mlp_backprop: trace does not match network");
  if (upstream.rows() != trace.inputs.front().rows() || upstream.cols() != net.output_dim())
    throw DimMismatch("mlp_backprop: upstream shape does not match network output");
  MlpGradients grads;
  grads.weight.resize(n_layers);
  grads.bias.resize(n_layers);
  Matrix g = upstream;
  for (std::size_t k = n_layers; k-- > 0;) {
    if (k + 1 != n_layers) scale_by_derivative(g, trace.pre_activations[k], net.activation);
    grads.weight[k].noalias() = trace.inputs[k].transpose() * g;
    grads.bias[k] = g.colwise().sum().transpose();
    Matrix next = g * net.layers[k].weight.transpose();
    g = std::move(next);
  }
  grads.input = std::move(g);
  return grads;
}

MlpGradients mlp_backprop(const Mlp& net, const Matrix& x, const Matrix& upstream) {
  MlpTrace trace;
  mlp_apply(net, x, &trace);
  return mlp_backprop(net, trace, upstream);
}

void append_parameters(Mlp& net, std::vector<ParamBlock>& out) {
  for (auto& layer : net.layers) {
    out.push_back({span_of(layer.weight), true});
    out.push_back({span_of(layer.bias), false});
  }
}

}  // namespace flowbench
