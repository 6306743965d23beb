#pragma once

#include "flowbench/numeric/matrix.hpp"
#include "flowbench/numeric/mlp.hpp"
#include "flowbench/numeric/rng.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace flowbench {

enum class FlowKind { nice, realnvp };

std::string_view to_string(FlowKind kind);
FlowKind parse_flow_kind(std::string_view name);

/// Which coordinate half conditions a coupling layer. With `even`, the even
/// indices pass through unchanged and drive the update of the odd indices.
enum class Parity { even, odd };

/// Hyperparameters for building and fitting a flow. Defaults are the
/// configuration used for the tabular benchmark.
struct TrainConfig {
  int epochs = 200;
  int batch_size = 512;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int n_coupling = 10;
  int hidden_dim = 256;
  int n_hidden_layers = 2;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when any field is out of range.
  void validate() const;
};

/// One coupling layer. NICE uses only `shift`; RealNVP additionally has a
/// log-scale network whose tanh output is multiplied by `scale`.
struct CouplingLayer {
  Parity parity = Parity::even;
  Mlp shift;
  Mlp log_scale;
  Vector scale;
};

/// Coupling-layer normalizing flow with a standard-normal prior.
///
/// Odd input dimensions are handled by appending one zero column, so the
/// network always works on an even `internal_dim`. NICE ends with a learned
/// diagonal scaling whose log-determinant does not depend on the input.
struct FlowModel {
  FlowKind kind = FlowKind::nice;
  Index input_dim = 0;
  bool padded = false;
  std::vector<CouplingLayer> layers;
  Vector scaling_logs;  // NICE only
  TrainConfig config;

  Index internal_dim() const { return input_dim + (padded ? 1 : 0); }
  Index half_dim() const { return internal_dim() / 2; }
  Index parameter_count() const;
};

/// Builds a flow that is the identity map: the last layer of every shift
/// network and every scale vector start at zero.
FlowModel build_flow(FlowKind kind, Index dim, const TrainConfig& config, Rng& rng);

/// Appends the zero pad column when the model expects one. Inputs that already
/// have `internal_dim` columns are returned unchanged.
Matrix pad_input(const FlowModel& model, const Matrix& x);

struct FlowOutput {
  Matrix z;       // internal_dim columns
  Vector logdet;  // log |det dz/dx| per row
};

FlowOutput flow_forward(const FlowModel& model, const Matrix& x);

/// Exact inverse of flow_forward; drops the pad column.
Matrix flow_inverse(const FlowModel& model, const Matrix& z);

/// log N(z; 0, I) + logdet, in nats.
Vector log_likelihood(const FlowModel& model, const Matrix& x);

/// Mean negative log-likelihood of a batch and its gradient. The gradient is
/// returned in a model of identical shape.
struct NllGradient {
  double loss = 0.0;
  FlowModel gradient;
};

NllGradient nll_and_gradient(const FlowModel& model, const Matrix& x);

/// Views of every trainable tensor, in a fixed order that matches between a
/// model and a gradient of the same shape.
std::vector<ParamBlock> parameter_blocks(FlowModel& model);

Vector flatten_parameters(const FlowModel& model);
void assign_parameters(FlowModel& model, const Vector& flat);

/// Adds N(0, scale^2) noise to every parameter, including the zero-initialised
/// ones. Used to move away from the identity for testing.
void perturb_parameters(FlowModel& model, Rng& rng, double scale);

}  // namespace flowbench
