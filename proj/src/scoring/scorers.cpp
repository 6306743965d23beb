#include "flowbench/scoring/scorers.hpp"

#include "flowbench/error.hpp"
#include "flowbench/numeric/linalg.hpp"

#include <cmath>

namespace flowbench {

ScoreVector slt_score(const FlowModel& model, const ScalerState& scaler, const Matrix& x) {
  return {-log_likelihood(model, apply_scaler(scaler, x)), "slt"};
}

double mean_train_nll(const FlowModel& model, const ScalerState& scaler, const Matrix& x_train) {
  if (x_train.rows() < 1) throw EmptyDataset("typicality reference needs training rows");
  return slt_score(model, scaler, x_train).values.mean();
}

Vector typicality_from_nll(const Vector& nll, double train_nll_mean) {
  return (nll.array() - train_nll_mean).abs().matrix();
}

ScoreVector typicality_score(const FlowModel& model, const ScalerState& scaler, double train_nll_mean,
                             const Matrix& x) {
  return {typicality_from_nll(slt_score(model, scaler, x).values, train_nll_mean), "typicality"};
}

ScoreVector typicality_score(const FlowModel& model, const ScalerState& scaler, const Matrix& x_train,
                             const Matrix& x) {
  return typicality_score(model, scaler, mean_train_nll(model, scaler, x_train), x);
}

ScoreVector pca_baseline_score(const Matrix& x_train, const Matrix& x, double component_ratio) {
  if (!(component_ratio > 0.0 && component_ratio <= 1.0))
    throw InvalidArgument("component ratio must lie in (0, 1]");
  if (x_train.rows() < 2) throw NotEnoughRows("PCA needs at least 2 training rows");
  if (x.cols() != x_train.cols()) throw DimMismatch("PCA input width differs from training data");
  const Index d = x_train.cols();
  // The small epsilon keeps ratio * d that is integral in exact arithmetic
  // from rounding up through floating-point noise.
  const Index k = std::min<Index>(d, static_cast<Index>(std::ceil(component_ratio * static_cast<double>(d) - 1e-9)));
  const Vector mu = column_means(x_train);
  const SymEigen eig = sym_eigen(covariance(x_train));
  const Matrix basis = eig.vectors.leftCols(k);
  const Matrix centred = x.rowwise() - mu.transpose();
  const Matrix residual = centred - (centred * basis) * basis.transpose();
  return {residual.rowwise().squaredNorm(), "pca"};
}

}  // namespace flowbench
