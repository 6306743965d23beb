#pragma once

#include "flowbench/numeric/matrix.hpp"
#include "flowbench/numeric/rng.hpp"

namespace flowbench {

/// Lower-triangular L with L * L^T = cov. Throws NotPositiveDefinite when a
/// pivot falls to 1e-12 or below.
Matrix cholesky(const Matrix& cov);

/// Rows are mean + chol * z with z ~ N(0, I).
Matrix mvn_sample(Rng& rng, const Vector& mean, const Matrix& chol, Index n);

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values(j)
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymEigen sym_eigen(const Matrix& a, int max_sweeps = 100);

/// D(i, j) = squared Euclidean distance between rows i and j.
Matrix pairwise_sq_dists(const Matrix& x);

Vector column_means(const Matrix& x);
/// Population covariance (divides by n).
Matrix covariance(const Matrix& x);

}  // namespace flowbench
