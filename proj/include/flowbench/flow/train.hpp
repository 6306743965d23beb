#pragma once

#include "flowbench/error.hpp"
#include "flowbench/flow/flow_model.hpp"

#include <vector>

namespace flowbench {

struct LossHistory {
  std::vector<double> nll;            // mean training NLL per epoch
  std::vector<double> learning_rate;  // rate used by the first step of each epoch
};

/// Training produced a non-finite loss. Carries the epochs completed so far.
class DivergedLoss : public Error {
 public:
  DivergedLoss(const std::string& what, LossHistory partial)
      : Error("DivergedLoss: " + what), history_(std::move(partial)) {}
  const LossHistory& history() const { return history_; }

 private:
  LossHistory history_;
};

/// Single annealing cycle from base_lr down towards zero.
double cosine_warm_restart_lr(long step, long total_steps, double base_lr);

/// AdamW with decoupled weight decay applied only to blocks marked `decay`.
class AdamW {
 public:
  AdamW(const TrainConfig& config, const std::vector<ParamBlock>& params);

  /// One update with the given learning rate; `grads` must mirror the
  /// parameter blocks passed at construction.
  void step(const std::vector<ParamBlock>& grads, double lr);
  long steps_taken() const { return t_; }

 private:
  std::vector<ParamBlock> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
};

struct TrainResult {
  FlowModel model;
  LossHistory history;
};

/// Fits a flow by minibatch maximum likelihood. `x` has the original
/// (unpadded) feature count; padding is handled by the model.
TrainResult train_flow(FlowKind kind, const Matrix& x, const TrainConfig& config);

/// Continues training an already built model.
LossHistory train_flow(FlowModel& model, const Matrix& x, const TrainConfig& config);

}  // namespace flowbench
