#pragma once

#include "flowbench/data/dataset.hpp"
#include "flowbench/numeric/rng.hpp"

#include <cstdint>
#include <vector>

namespace flowbench {

/// N(mean, sigma^2 I), or N(mean, L L^T) when `chol` is set.
struct GaussianSpec {
  Vector mean;
  double sigma = 1.0;
  Matrix chol;  // empty for the isotropic case

  static GaussianSpec isotropic(Index d, double mu, double sigma);
  Index dim() const { return mean.size(); }
  Matrix sample(Rng& rng, Index n) const;
};

/// Sigma_ij = rho^|i-j|.
Matrix ar_covariance(Index d, double rho);

struct GaussianPair {
  Matrix train;         // drawn from P
  LabeledDataset test;  // P rows labelled 0, then Q rows labelled 1
};

GaussianPair gen_gaussian_pair(const GaussianSpec& p, const GaussianSpec& q, Index n_train, Index n_test_each,
                               std::uint64_t seed);

struct DimensionSweepSpec {
  std::vector<Index> dims{10, 50, 100, 500, 1000, 5000, 10000, 15000};
  double mu_p = 0.0;
  double mu_q = 0.0;
  double sigma_p = 1.0;
  double sigma_q = 1.0;
  Index n_train = 10000;
  Index n_test_each = 10000;
  std::uint64_t seed = 0;
};

/// Seed used for the cell of dimension d; depends only on (seed, d).
std::uint64_t sweep_cell_seed(std::uint64_t seed, Index d);

/// Data for one dimension of the sweep, with means broadcast to mu * 1_d.
/// Generated on demand because the high-dimensional cells are large.
GaussianPair dimension_sweep_cell(const DimensionSweepSpec& spec, Index d);

/// Checks the dims list (positive, strictly ascending).
void validate_sweep(const DimensionSweepSpec& spec);

}  // namespace flowbench
