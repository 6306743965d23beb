#include "flowbench/synth/gmm.hpp"

#include "flowbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowbench {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// log N(x_i | component c) for every row and component.
Matrix component_log_densities(const GmmDiag& g, const Matrix& x) {
  const Index n = x.rows(), k = g.components(), d = g.dim();
  Matrix out(n, k);
  for (Index c = 0; c < k; ++c) {
    double norm = -0.5 * static_cast<double>(d) * kLog2Pi;
    for (Index j = 0; j < d; ++j) norm -= 0.5 * std::log(g.variances(c, j));
    const double lw = std::log(g.weights(c));
    for (Index i = 0; i < n; ++i) {
      double q = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double diff = x(i, j) - g.means(c, j);
        q += diff * diff / g.variances(c, j);
      }
      out(i, c) = lw + norm - 0.5 * q;
    }
  }
  return out;
}

// Normalises rows of log-weights in place into responsibilities; returns the
// summed log-likelihood.
double normalise_rows(Matrix& lp) {
  double total = 0.0;
  for (Index i = 0; i < lp.rows(); ++i) {
    const double m = lp.row(i).maxCoeff();
    const double lse = m + std::log((lp.row(i).array() - m).exp().sum());
    lp.row(i) = (lp.row(i).array() - lse).exp();
    total += lse;
  }
  return total;
}

GmmDiag kmeanspp_init(const Matrix& x, int k, Rng& rng) {
  const Index n = x.rows(), d = x.cols();
  GmmDiag g{Vector::Constant(k, 1.0 / k), Matrix(k, d), Matrix(k, d)};
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    g.means.row(c) = x.row(pick);
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - g.means.row(c)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      continue;
    }
    double u = rng.uniform() * total;
    pick = n - 1;
    for (Index i = 0; i < n; ++i) {
      u -= d2[static_cast<std::size_t>(i)];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
  }
  const Vector mu = x.colwise().mean();
  const Vector var = ((x.rowwise() - mu.transpose()).array().square().colwise().mean()).transpose();
  for (int c = 0; c < k; ++c) g.variances.row(c) = var.transpose().array().max(kGmmVarianceFloor).matrix();
  return g;
}

// One EM run; returns false when a component collapses.
bool run_em(const Matrix& x, int k, Rng& rng, int max_iter, double tol, GmmFit& fit) {
  const Index n = x.rows(), d = x.cols();
  fit = GmmFit{kmeanspp_init(x, k, rng), {}, 0, false};
  GmmDiag& g = fit.gmm;
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Matrix r = component_log_densities(g, x);
    normalise_rows(r);
    const Vector nk = r.colwise().sum().transpose();
    for (int c = 0; c < k; ++c)
      if (!(nk(c) > 1e-10 * static_cast<double>(n))) return false;
    g.weights = nk / static_cast<double>(n);
    g.means = (r.transpose() * x).array().colwise() / nk.array();
    for (int c = 0; c < k; ++c) {
      for (Index j = 0; j < d; ++j) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
          const double diff = x(i, j) - g.means(c, j);
          s += r(i, c) * diff * diff;
        }
        g.variances(c, j) = std::max(s / nk(c), kGmmVarianceFloor);
      }
    }
    const double ll = gmm_mean_log_likelihood(g, x);
    fit.log_likelihood.push_back(ll);
    fit.iterations = it + 1;
    if (ll - prev < tol) {
      fit.converged = true;
      break;
    }
    prev = ll;
  }
  return true;
}

}  // namespace

double gmm_mean_log_likelihood(const GmmDiag& g, const Matrix& x) {
  Matrix lp = component_log_densities(g, x);
  return normalise_rows(lp) / static_cast<double>(x.rows());
}

GmmFit fit_gmm_diag(const Matrix& x, int k, std::uint64_t seed, int max_iter, double tol) {
  if (k < 1) throw InvalidArgument("GMM needs k >= 1");
  if (x.rows() < k) throw NotEnoughRows("GMM with k = " + std::to_string(k) + " needs at least k rows");
  if (max_iter < 1) throw InvalidArgument("max_iter must be positive");
  Rng rng(seed);
  GmmFit fit;
  if (run_em(x, k, rng, max_iter, tol, fit)) return fit;
  // One reseed from a fresh initialisation before giving up.
  Rng retry(derive_seed(seed, 1));
  if (run_em(x, k, retry, max_iter, tol, fit)) return fit;
  throw DegenerateComponent("a mixture component lost all responsibility twice");
}

Matrix sample_gmm(const GmmDiag& g, Rng& rng, Index n, double mean_scale, double var_scale) {
  if (!(var_scale > 0.0)) throw InvalidArgument("variance scale must be positive");
  const Index k = g.components(), d = g.dim();
  Vector cum(k);
  double acc = 0.0;
  for (Index c = 0; c < k; ++c) cum(c) = (acc += g.weights(c));
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    Index c = 0;
    while (c + 1 < k && u >= cum(c)) ++c;
    for (Index j = 0; j < d; ++j)
      out(i, j) = mean_scale * g.means(c, j) + std::sqrt(var_scale * g.variances(c, j)) * rng.normal();
  }
  return out;
}

}  // namespace flowbench
