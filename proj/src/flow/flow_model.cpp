#include "flowbench/flow/flow_model.hpp"

#include "flowbench/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace flowbench {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

// Coupling layers act on the even-indexed and odd-indexed coordinates as two
// separate blocks.
struct Halves {
  Matrix even;
  Matrix odd;
};

Halves split(const Matrix& x) {
  const Index h = x.cols() / 2;
  Halves out{Matrix(x.rows(), h), Matrix(x.rows(), h)};
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < h; ++j) {
      out.even(i, j) = x(i, 2 * j);
      out.odd(i, j) = x(i, 2 * j + 1);
    }
  }
  return out;
}

Matrix merge(const Halves& hv) {
  const Index h = hv.even.cols();
  Matrix x(hv.even.rows(), 2 * h);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < h; ++j) {
      x(i, 2 * j) = hv.even(i, j);
      x(i, 2 * j + 1) = hv.odd(i, j);
    }
  }
  return x;
}

Vector merge(const Vector& even, const Vector& odd) {
  Vector v(even.size() * 2);
  for (Index j = 0; j < even.size(); ++j) {
    v(2 * j) = even(j);
    v(2 * j + 1) = odd(j);
  }
  return v;
}

void require_finite(const Matrix& m, const char* where, std::size_t layer) {
  if (!m.allFinite())
    throw NonFiniteActivation(std::string(where) + " in coupling layer " + std::to_string(layer));
}

std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Conditioning and transformed blocks for a layer.
Matrix& cond_of(Halves& hv, Parity p) { return p == Parity::even ? hv.even : hv.odd; }
Matrix& moved_of(Halves& hv, Parity p) { return p == Parity::even ? hv.odd : hv.even; }

}  // namespace

std::string_view to_string(FlowKind kind) {
  return kind == FlowKind::nice ? "nice" : "realnvp";
}

FlowKind parse_flow_kind(std::string_view name) {
  if (name == "nice") return FlowKind::nice;
  if (name == "realnvp") return FlowKind::realnvp;
  throw InvalidArgument("unknown flow kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning_rate must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw InvalidArgument("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (n_coupling < 1) throw InvalidArgument("n_coupling must be positive");
  if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be positive");
  if (n_hidden_layers < 1) throw InvalidArgument("n_hidden_layers must be positive");
}

Index FlowModel::parameter_count() const {
  Index n = scaling_logs.size();
  for (const auto& l : layers) n += l.shift.parameter_count() + l.log_scale.parameter_count() + l.scale.size();
  return n;
}

FlowModel build_flow(FlowKind kind, Index dim, const TrainConfig& config, Rng& rng) {
  if (dim < 1) throw InvalidArgument("flow dimension must be at least 1");
  config.validate();
  FlowModel m;
  m.kind = kind;
  m.input_dim = dim;
  m.padded = dim % 2 == 1;
  m.config = config;
  const Index h = m.half_dim();
  std::vector<Index> widths{h};
  for (int i = 0; i < config.n_hidden_layers; ++i) widths.push_back(config.hidden_dim);
  widths.push_back(h);
  for (int i = 0; i < config.n_coupling; ++i) {
    CouplingLayer layer;
    layer.parity = i % 2 == 0 ? Parity::even : Parity::odd;
    layer.shift = make_mlp(widths, config.activation, rng, /*zero_last_layer=*/true);
    if (kind == FlowKind::realnvp) {
      layer.log_scale = make_mlp(widths, config.activation, rng);
      layer.scale = Vector::Zero(h);
    }
    m.layers.push_back(std::move(layer));
  }
  if (kind == FlowKind::nice) m.scaling_logs = Vector::Zero(m.internal_dim());
  return m;
}

Matrix pad_input(const FlowModel& model, const Matrix& x) {
  if (x.cols() == model.internal_dim()) return x;
  if (x.cols() != model.input_dim)
    throw DimMismatch("expected " + std::to_string(model.input_dim) + " columns, got " +
                      std::to_string(x.cols()));
  Matrix out = Matrix::Zero(x.rows(), model.internal_dim());
  out.leftCols(x.cols()) = x;
  return out;
}

FlowOutput flow_forward(const FlowModel& model, const Matrix& x) {
  Halves hv = split(pad_input(model, x));
  Vector logdet = Vector::Zero(x.rows());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const CouplingLayer& layer = model.layers[i];
    const Matrix& cond = cond_of(hv, layer.parity);
    Matrix& moved = moved_of(hv, layer.parity);
    Matrix t = mlp_apply(layer.shift, cond);
    require_finite(t, "shift network", i);
    if (model.kind == FlowKind::realnvp) {
      Matrix h = mlp_apply(layer.log_scale, cond);
      require_finite(h, "scale network", i);
      Matrix s = (h.array().tanh().rowwise() * layer.scale.transpose().array()).matrix();
      moved = (moved.array() * s.array().exp() + t.array()).matrix();
      logdet += s.rowwise().sum();
    } else {
      moved += t;
    }
    require_finite(moved, "output", i);
  }
  FlowOutput out{merge(hv), std::move(logdet)};
  if (model.kind == FlowKind::nice) {
    out.z.array().rowwise() *= model.scaling_logs.transpose().array().exp();
    out.logdet.setConstant(model.scaling_logs.sum());
    require_finite(out.z, "scaling", model.layers.size());
  }
  return out;
}

Matrix flow_inverse(const FlowModel& model, const Matrix& z) {
  if (z.cols() != model.internal_dim())
    throw DimMismatch("expected " + std::to_string(model.internal_dim()) + " latent columns, got " +
                      std::to_string(z.cols()));
  Matrix y = z;
  if (model.kind == FlowKind::nice) y.array().rowwise() *= (-model.scaling_logs).transpose().array().exp();
  Halves hv = split(y);
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    const CouplingLayer& layer = model.layers[k];
    const Matrix& cond = cond_of(hv, layer.parity);
    Matrix& moved = moved_of(hv, layer.parity);
    moved -= mlp_apply(layer.shift, cond);
    if (model.kind == FlowKind::realnvp) {
      Matrix h = mlp_apply(layer.log_scale, cond);
      Matrix s = (h.array().tanh().rowwise() * layer.scale.transpose().array()).matrix();
      moved = (moved.array() * (-s.array()).exp()).matrix();
    }
  }
  Matrix x = merge(hv);
  return model.padded ? Matrix(x.leftCols(model.input_dim)) : x;
}

Vector log_likelihood(const FlowModel& model, const Matrix& x) {
  FlowOutput f = flow_forward(model, x);
  const double d = static_cast<double>(model.internal_dim());
  return (-0.5 * d * kLog2Pi - 0.5 * f.z.rowwise().squaredNorm().array()).matrix() + f.logdet;
}

NllGradient nll_and_gradient(const FlowModel& model, const Matrix& x) {
  const Index n = x.rows();
  if (n < 1) throw EmptyDataset("gradient of an empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t L = model.layers.size();

  // Forward pass, keeping what the backward pass needs.
  struct Saved {
    Matrix moved_in;
    MlpTrace shift_trace, scale_trace;
    Matrix tanh_h, exp_s;
  };
  std::vector<Saved> saved(L);
  Halves hv = split(pad_input(model, x));
  Vector logdet = Vector::Zero(n);
  for (std::size_t i = 0; i < L; ++i) {
    const CouplingLayer& layer = model.layers[i];
    const Matrix& cond = cond_of(hv, layer.parity);
    Matrix& moved = moved_of(hv, layer.parity);
    Saved& sv = saved[i];
    sv.moved_in = moved;
    Matrix t = mlp_apply(layer.shift, cond, &sv.shift_trace);
    require_finite(t, "shift network", i);
    if (model.kind == FlowKind::realnvp) {
      Matrix h = mlp_apply(layer.log_scale, cond, &sv.scale_trace);
      require_finite(h, "scale network", i);
      sv.tanh_h = h.array().tanh().matrix();
      Matrix s = (sv.tanh_h.array().rowwise() * layer.scale.transpose().array()).matrix();
      sv.exp_s = s.array().exp().matrix();
      moved = (moved.array() * sv.exp_s.array() + t.array()).matrix();
      logdet += s.rowwise().sum();
    } else {
      moved += t;
    }
    require_finite(moved, "output", i);
  }

  NllGradient out;
  out.gradient = model;
  FlowModel& g = out.gradient;
  const double d = static_cast<double>(model.internal_dim());

  // Latent and upstream gradient of the mean loss with respect to z.
  Halves gz;
  if (model.kind == FlowKind::nice) {
    const Vector se = model.scaling_logs.array().exp();
    const Halves se_h = split(Matrix(se.transpose()));
    Matrix z_even = (hv.even.array().rowwise() * se_h.even.row(0).array()).matrix();
    Matrix z_odd = (hv.odd.array().rowwise() * se_h.odd.row(0).array()).matrix();
    const double sq = z_even.squaredNorm() + z_odd.squaredNorm();
    const double lsum = model.scaling_logs.sum();
    out.loss = 0.5 * d * kLog2Pi + 0.5 * sq * inv_n - lsum;
    Vector ge = (z_even.array().square().colwise().sum() * inv_n - 1.0).transpose();
    Vector go = (z_odd.array().square().colwise().sum() * inv_n - 1.0).transpose();
    g.scaling_logs = merge(ge, go);
    // dL/dy = (z / n) * exp(scaling_logs)
    gz.even = (z_even.array().rowwise() * se_h.even.row(0).array()).matrix() * inv_n;
    gz.odd = (z_odd.array().rowwise() * se_h.odd.row(0).array()).matrix() * inv_n;
  } else {
    const double sq = hv.even.squaredNorm() + hv.odd.squaredNorm();
    out.loss = 0.5 * d * kLog2Pi + 0.5 * sq * inv_n - logdet.sum() * inv_n;
    gz.even = hv.even * inv_n;
    gz.odd = hv.odd * inv_n;
  }
  if (!std::isfinite(out.loss)) throw NonFiniteActivation("loss is not finite");

  for (std::size_t k = L; k-- > 0;) {
    const CouplingLayer& layer = model.layers[k];
    CouplingLayer& gl = g.layers[k];
    const Saved& sv = saved[k];
    Matrix& g_cond = cond_of(gz, layer.parity);
    Matrix& g_moved = moved_of(gz, layer.parity);
    const Matrix g_out = g_moved;

    MlpGradients gt = mlp_backprop(layer.shift, sv.shift_trace, g_out);
    for (std::size_t j = 0; j < gl.shift.layers.size(); ++j) {
      gl.shift.layers[j].weight = std::move(gt.weight[j]);
      gl.shift.layers[j].bias = std::move(gt.bias[j]);
    }
    g_cond += gt.input;

    if (model.kind == FlowKind::realnvp) {
      g_moved = (g_out.array() * sv.exp_s.array()).matrix();
      Matrix g_s = (g_out.array() * sv.moved_in.array() * sv.exp_s.array() - inv_n).matrix();
      gl.scale = (g_s.array() * sv.tanh_h.array()).colwise().sum().transpose();
      Matrix g_h = ((g_s.array().rowwise() * layer.scale.transpose().array()) *
                    (1.0 - sv.tanh_h.array().square()))
                       .matrix();
      MlpGradients gs = mlp_backprop(layer.log_scale, sv.scale_trace, g_h);
      for (std::size_t j = 0; j < gl.log_scale.layers.size(); ++j) {
        gl.log_scale.layers[j].weight = std::move(gs.weight[j]);
        gl.log_scale.layers[j].bias = std::move(gs.bias[j]);
      }
      g_cond += gs.input;
    }
    // NICE: the moved block's gradient passes through unchanged.
  }
  return out;
}

std::vector<ParamBlock> parameter_blocks(FlowModel& model) {
  std::vector<ParamBlock> out;
  for (auto& layer : model.layers) {
    append_parameters(layer.shift, out);
    if (model.kind == FlowKind::realnvp) {
      append_parameters(layer.log_scale, out);
      out.push_back({span_of(layer.scale), false});
    }
  }
  if (model.kind == FlowKind::nice) out.push_back({span_of(model.scaling_logs), false});
  return out;
}

Vector flatten_parameters(const FlowModel& model) {
  FlowModel copy = model;
  Vector flat(copy.parameter_count());
  Index k = 0;
  for (const auto& b : parameter_blocks(copy))
    for (double v : b.values) flat(k++) = v;
  return flat;
}

void assign_parameters(FlowModel& model, const Vector& flat) {
  if (flat.size() != model.parameter_count())
    throw DimMismatch("parameter vector has " + std::to_string(flat.size()) + " entries, model has " +
                      std::to_string(model.parameter_count()));
  Index k = 0;
  for (auto& b : parameter_blocks(model))
    for (double& v : b.values) v = flat(k++);
}

void perturb_parameters(FlowModel& model, Rng& rng, double scale) {
  for (auto& b : parameter_blocks(model))
    for (double& v : b.values) v += scale * rng.normal();
}

}  // namespace flowbench
