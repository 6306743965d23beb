#pragma once

#include "flowbench/numeric/rng.hpp"

#include <cstdint>
#include <vector>

namespace flowbench {

struct GmmDiag {
  Vector weights;    // k
  Matrix means;      // k x d
  Matrix variances;  // k x d

  Index components() const { return weights.size(); }
  Index dim() const { return means.cols(); }
};

struct GmmFit {
  GmmDiag gmm;
  std::vector<double> log_likelihood;  // mean per-row log-likelihood after each iteration
  int iterations = 0;
  bool converged = false;
};

inline constexpr double kGmmVarianceFloor = 1e-6;

/// EM for a diagonal-covariance mixture with k-means++ seeding. Stops once
/// the mean log-likelihood improves by less than `tol`.
GmmFit fit_gmm_diag(const Matrix& x, int k, std::uint64_t seed, int max_iter = 200, double tol = 1e-6);

/// Mean per-row log-likelihood under the mixture.
double gmm_mean_log_likelihood(const GmmDiag& g, const Matrix& x);

/// Samples with every mean multiplied by `mean_scale` and every variance by
/// `var_scale`.
Matrix sample_gmm(const GmmDiag& g, Rng& rng, Index n, double mean_scale = 1.0, double var_scale = 1.0);

}  // namespace flowbench
