#pragma once

#include "flowbench/data/scaler.hpp"
#include "flowbench/numeric/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace flowbench {

enum class IdMethod { twonn, mle };
enum class MleAggregation { mackay, mean };

std::string to_string(IdMethod m);
IdMethod parse_id_method(const std::string& name);

struct IdEstimate {
  IdMethod method = IdMethod::twonn;
  double value = 0.0;
  int k = 0;              // mle neighbourhood size
  double discard = 0.0;   // twonn trimmed fraction
  Index n_points = 0;     // points contributing after degeneracy filtering
  std::uint64_t seed = 0;
};

struct DRatio {
  double id = 0.0;
  Index ambient = 0;
  double ratio = 0.0;
};

/// Row i holds the sorted Euclidean distances from point i to its k nearest
/// other points (brute force, exact).
Matrix knn_distances(const Matrix& x, int k);

/// TwoNN with the largest `discard_top` fraction of ratios r2/r1 censored.
/// The censored points enter the likelihood through the survival term, so
/// trimming does not bias the estimate.
IdEstimate twonn_estimate(const Matrix& x, double discard_top = 0.1, std::uint64_t seed = 0);

/// Levina-Bickel estimator with k neighbours.
IdEstimate mle_estimate(const Matrix& x, int k, MleAggregation agg = MleAggregation::mackay,
                        std::uint64_t seed = 0);

DRatio d_ratio(double estimate, Index ambient);

struct RobustnessSpec {
  std::vector<double> subsample_ratios{1.0, 0.9, 0.8, 0.5};
  std::vector<ScalerKind> scalers{ScalerKind::none};
  IdMethod method = IdMethod::twonn;
  int k = 20;
  double discard = 0.1;
};

struct RobustnessCell {
  double ratio = 1.0;
  ScalerKind scaler = ScalerKind::none;
  Index rows = 0;
  IdEstimate estimate;
};

/// One estimate per (ratio, scaler). Subsamples are drawn without replacement
/// from a seeded permutation; each cell fits its scaler on its own subsample.
std::vector<RobustnessCell> robustness_suite(const Matrix& x, const RobustnessSpec& spec, std::uint64_t seed);

/// max - min of the cell estimates.
double estimate_spread(const std::vector<RobustnessCell>& cells);

}  // namespace flowbench
