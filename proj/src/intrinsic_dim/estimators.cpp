#include "flowbench/intrinsic_dim/estimators.hpp"

#include "flowbench/error.hpp"
#include "flowbench/numeric/rng.hpp"

#include <algorithm>
#include <cmath>

namespace flowbench {

std::string to_string(IdMethod m) { return m == IdMethod::twonn ? "twonn" : "mle"; }

IdMethod parse_id_method(const std::string& name) {
  if (name == "twonn") return IdMethod::twonn;
  if (name == "mle") return IdMethod::mle;
  throw InvalidArgument("unknown intrinsic-dimension method '" + name + "'");
}

Matrix knn_distances(const Matrix& x, int k) {
  const Index n = x.rows();
  if (k < 1) throw InvalidArgument("k must be positive");
  if (k >= n) throw KTooLarge("k = " + std::to_string(k) + " needs more than " + std::to_string(n) + " rows");
  const Index d = x.cols();
  Matrix out(n, k);
  std::vector<double> dist(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (Index c = 0; c < d; ++c) {
        const double diff = x(i, c) - x(j, c);
        s += diff * diff;
      }
      dist[m++] = s;
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int j = 0; j < k; ++j) out(i, j) = std::sqrt(dist[static_cast<std::size_t>(j)]);
  }
  return out;
}

IdEstimate twonn_estimate(const Matrix& x, double discard_top, std::uint64_t seed) {
  if (!(discard_top >= 0.0 && discard_top < 1.0)) throw InvalidArgument("discard fraction must lie in [0, 1)");
  if (x.rows() < 20) throw NotEnoughRows("TwoNN needs at least 20 rows");
  const Matrix nn = knn_distances(x, 2);
  std::vector<double> log_mu;
  for (Index i = 0; i < nn.rows(); ++i) {
    const double r1 = nn(i, 0), r2 = nn(i, 1);
    if (r1 <= 0.0 || r2 == r1) continue;
    log_mu.push_back(std::log(r2 / r1));
  }
  const std::size_t usable = log_mu.size();
  if (usable < 10) throw DegenerateData("only " + std::to_string(usable) + " points with distinct neighbours");
  std::sort(log_mu.begin(), log_mu.end());
  const auto kept = static_cast<std::size_t>(std::floor((1.0 - discard_top) * static_cast<double>(usable)));
  if (kept < 1) throw DegenerateData("trimming left no points");
  double sum = 0.0;
  for (std::size_t i = 0; i < kept; ++i) sum += log_mu[i];
  // Censored Pareto likelihood: discarded points only tell us mu > mu_cut.
  sum += static_cast<double>(usable - kept) * log_mu[kept - 1];
  if (!(sum > 0.0)) throw DegenerateData("neighbour distance ratios carry no spread");
  IdEstimate e;
  e.method = IdMethod::twonn;
  e.value = static_cast<double>(kept) / sum;
  e.discard = discard_top;
  e.n_points = static_cast<Index>(usable);
  e.seed = seed;
  return e;
}

IdEstimate mle_estimate(const Matrix& x, int k, MleAggregation agg, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("MLE needs k >= 2");
  const Matrix nn = knn_distances(x, k);
  double sum = 0.0;
  Index used = 0;
  for (Index i = 0; i < nn.rows(); ++i) {
    if (nn(i, 0) <= 0.0) continue;  // duplicate point
    const double tk = nn(i, k - 1);
    double s = 0.0;
    for (int j = 0; j < k - 1; ++j) s += std::log(tk / nn(i, j));
    if (!(s > 0.0)) continue;  // all k neighbours equidistant
    const double inv_m = s / static_cast<double>(k - 1);
    sum += agg == MleAggregation::mackay ? inv_m : 1.0 / inv_m;
    ++used;
  }
  if (2 * used < nn.rows())
    throw DegenerateData(std::to_string(nn.rows() - used) + " of " + std::to_string(nn.rows()) +
                         " points have zero or tied neighbour distances");
  IdEstimate e;
  e.method = IdMethod::mle;
  e.k = k;
  e.value = agg == MleAggregation::mackay ? static_cast<double>(used) / sum : sum / static_cast<double>(used);
  e.n_points = used;
  e.seed = seed;
  return e;
}

DRatio d_ratio(double estimate, Index ambient) {
  if (ambient < 1) throw InvalidArgument("ambient dimension must be positive");
  if (!(estimate > 0.0) || !std::isfinite(estimate)) throw InvalidArgument("ID estimate must be positive");
  return {estimate, ambient, estimate / static_cast<double>(ambient)};
}

std::vector<RobustnessCell> robustness_suite(const Matrix& x, const RobustnessSpec& spec, std::uint64_t seed) {
  if (spec.subsample_ratios.empty() || spec.scalers.empty()) throw InvalidArgument("robustness grids must be non-empty");
  Rng rng(seed);
  const std::vector<Index> perm = random_permutation(rng, x.rows());
  std::vector<RobustnessCell> out;
  for (double ratio : spec.subsample_ratios) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("subsample ratios must lie in (0, 1]");
    const auto rows = static_cast<Index>(std::llround(ratio * static_cast<double>(x.rows())));
    Matrix sub(rows, x.cols());
    for (Index i = 0; i < rows; ++i) sub.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    for (ScalerKind sk : spec.scalers) {
      const Matrix z = apply_scaler(fit_scaler(sub, sk), sub);
      RobustnessCell c{ratio, sk, rows, {}};
      c.estimate = spec.method == IdMethod::twonn ? twonn_estimate(z, spec.discard, seed)
                                                  : mle_estimate(z, spec.k, MleAggregation::mackay, seed);
      out.push_back(c);
    }
  }
  return out;
}

double estimate_spread(const std::vector<RobustnessCell>& cells) {
  if (cells.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return a.estimate.value < b.estimate.value;
  });
  return hi->estimate.value - lo->estimate.value;
}

}  // namespace flowbench
