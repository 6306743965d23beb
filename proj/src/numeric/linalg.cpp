#include "flowbench/numeric/linalg.hpp"

#include "flowbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace flowbench {
namespace {

void require_square_symmetric(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw DimMismatch(std::string(who) + ": matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale)
        throw InvalidArgument(std::string(who) + ": matrix is not symmetric");
}

}  // namespace

Matrix cholesky(const Matrix& cov) {
  require_square_symmetric(cov, "cholesky");
  const Index n = cov.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = cov(j, j);
    for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 1e-12))
      throw NotPositiveDefinite("pivot " + std::to_string(j) + " = " + std::to_string(pivot));
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (Index i = j + 1; i < n; ++i) {
      double s = cov(i, j);
      for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / diag;
    }
  }
  return l;
}

Matrix mvn_sample(Rng& rng, const Vector& mean, const Matrix& chol, Index n) {
  if (chol.rows() != chol.cols() || chol.rows() != mean.size())
    throw DimMismatch("mvn_sample: mean has " + std::to_string(mean.size()) +
                      " entries, chol is " + std::to_string(chol.rows()) + "x" +
                      std::to_string(chol.cols()));
  Matrix z = standard_normal_sample(rng, n, mean.size());
  Matrix out = z * chol.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

SymEigen sym_eigen(const Matrix& input, int max_sweeps) {
  require_square_symmetric(input, "sym_eigen");
  const Index n = input.rows();
  if (n > 4096) throw InvalidArgument("sym_eigen: dimension above 4096");
  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);

  auto off_norm = [&] {
    double s = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };
  const double total = std::max(a.norm(), 1e-300);

  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (off_norm() <= 1e-14 * total) {
      converged = true;
      break;
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= 1e-14 * total;
  }
  if (!converged) throw NoConvergence("sym_eigen: off-diagonal mass remains after sweeps");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });
  SymEigen out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  const Index n = x.rows();
  if (n < 2) throw NotEnoughRows("pairwise_sq_dists needs at least 2 rows");
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Index k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - x(j, k);
        s += diff * diff;
      }
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

Vector column_means(const Matrix& x) {
  if (x.rows() == 0) throw EmptyDataset("column_means of an empty matrix");
  return x.colwise().mean().transpose();
}

Matrix covariance(const Matrix& x) {
  const Vector mu = column_means(x);
  const Matrix centered = x.rowwise() - mu.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

}  // namespace flowbench
