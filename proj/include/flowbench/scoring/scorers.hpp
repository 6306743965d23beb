#pragma once

#include "flowbench/data/scaler.hpp"
#include "flowbench/flow/flow_model.hpp"

#include <string>

namespace flowbench {

/// Per-sample anomaly scores; larger means more anomalous.
struct ScoreVector {
  Vector values;
  std::string scorer;
};

/// Negative log-likelihood of the scaled rows.
ScoreVector slt_score(const FlowModel& model, const ScalerState& scaler, const Matrix& x);

/// Mean NLL of the (raw) training rows, the entropy estimate used by the
/// typicality test.
double mean_train_nll(const FlowModel& model, const ScalerState& scaler, const Matrix& x_train);

/// |NLL(x) - mean train NLL|.
ScoreVector typicality_score(const FlowModel& model, const ScalerState& scaler, const Matrix& x_train,
                             const Matrix& x);
ScoreVector typicality_score(const FlowModel& model, const ScalerState& scaler, double train_nll_mean,
                             const Matrix& x);

/// Same transform applied to precomputed NLL values.
Vector typicality_from_nll(const Vector& nll, double train_nll_mean);

/// Squared reconstruction error after projecting onto the top
/// ceil(ratio * d) principal directions of the training rows.
ScoreVector pca_baseline_score(const Matrix& x_train, const Matrix& x, double component_ratio = 0.8);

}  // namespace flowbench
