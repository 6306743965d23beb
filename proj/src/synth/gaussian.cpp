#include "flowbench/synth/gaussian.hpp"

#include "flowbench/error.hpp"
#include "flowbench/numeric/linalg.hpp"

#include <cmath>

namespace flowbench {

GaussianSpec GaussianSpec::isotropic(Index d, double mu, double sigma) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return {Vector::Constant(d, mu), sigma, Matrix()};
}

Matrix GaussianSpec::sample(Rng& rng, Index n) const {
  if (chol.size() > 0) return mvn_sample(rng, mean, chol, n);
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  Matrix z = standard_normal_sample(rng, n, dim()) * sigma;
  z.rowwise() += mean.transpose();
  return z;
}

Matrix ar_covariance(Index d, double rho) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw RhoOutOfRange("rho = " + std::to_string(rho) + " outside [0, 1)");
  Matrix s(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return s;
}

GaussianPair gen_gaussian_pair(const GaussianSpec& p, const GaussianSpec& q, Index n_train, Index n_test_each,
                               std::uint64_t seed) {
  if (p.dim() != q.dim()) throw DimMismatch("P and Q have different dimensions");
  Rng rng(seed);
  GaussianPair out;
  out.train = p.sample(rng, n_train);
  const Index d = p.dim();
  out.test.features.resize(2 * n_test_each, d);
  out.test.features.topRows(n_test_each) = p.sample(rng, n_test_each);
  out.test.features.bottomRows(n_test_each) = q.sample(rng, n_test_each);
  out.test.labels.assign(static_cast<std::size_t>(n_test_each), 0);
  out.test.labels.resize(static_cast<std::size_t>(2 * n_test_each), 1);
  for (Index j = 0; j < d; ++j) out.test.feature_names.push_back("x" + std::to_string(j));
  out.test.name = "gaussian_pair_d" + std::to_string(d);
  return out;
}

std::uint64_t sweep_cell_seed(std::uint64_t seed, Index d) {
  return derive_seed(seed, static_cast<std::uint64_t>(d));
}

void validate_sweep(const DimensionSweepSpec& spec) {
  if (spec.dims.empty()) throw InvalidArgument("dimension list is empty");
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    if (spec.dims[i] < 1) throw InvalidArgument("dimensions must be positive");
    if (i > 0 && spec.dims[i] <= spec.dims[i - 1]) throw InvalidArgument("dimensions must be strictly ascending");
  }
}

GaussianPair dimension_sweep_cell(const DimensionSweepSpec& spec, Index d) {
  return gen_gaussian_pair(GaussianSpec::isotropic(d, spec.mu_p, spec.sigma_p),
                           GaussianSpec::isotropic(d, spec.mu_q, spec.sigma_q), spec.n_train, spec.n_test_each,
                           sweep_cell_seed(spec.seed, d));
}

}  // namespace flowbench
