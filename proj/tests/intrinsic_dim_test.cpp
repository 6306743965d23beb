#include "flowbench/error.hpp"
#include "flowbench/intrinsic_dim/estimators.hpp"
#include "flowbench/numeric/linalg.hpp"
#include "flowbench/numeric/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace flowbench;

namespace {

Matrix ar_sample(int d, double rho, Index n, std::uint64_t seed) {
  Matrix s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  Rng rng(seed);
  return mvn_sample(rng, Vector::Zero(d), cholesky(s), n);
}

Matrix random_rotation(Index d, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(standard_normal_sample(rng, d, d)));
  return Matrix(qr.householderQ());
}

}  // namespace

TEST(Knn, CollinearPoints) {
  Matrix x(3, 1);
  x << 0, 1, 3;
  Matrix nn = knn_distances(x, 2);
  EXPECT_EQ(nn(0, 0), 1.0);
  EXPECT_EQ(nn(0, 1), 3.0);
  EXPECT_EQ(nn(2, 0), 2.0);
}

TEST(Knn, DuplicatePoint) {
  Matrix x(3, 2);
  x << 1, 1, 1, 1, 4, 5;
  EXPECT_EQ(knn_distances(x, 1)(0, 0), 0.0);
}

TEST(Knn, MatchesBruteForce) {
  Rng rng(1);
  Matrix x = standard_normal_sample(rng, 50, 4);
  Matrix nn = knn_distances(x, 5);
  for (Index i = 0; i < 50; ++i) {
    std::vector<double> all;
    for (Index j = 0; j < 50; ++j)
      if (j != i) all.push_back(std::sqrt((x.row(i) - x.row(j)).squaredNorm()));
    std::sort(all.begin(), all.end());
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(nn(i, j), all[static_cast<std::size_t>(j)], 1e-14);
  }
}

TEST(Knn, KTooLarge) {
  EXPECT_THROW(knn_distances(Matrix::Zero(5, 2), 5), KTooLarge);
  EXPECT_THROW(mle_estimate(Matrix::Zero(5, 2), 5), KTooLarge);
}

TEST(TwoNN, GaussianPlane) {
  double mean = 0.0;
  for (int s = 0; s < 10; ++s) {
    Rng rng(100 + s);
    mean += twonn_estimate(standard_normal_sample(rng, 10000, 2)).value / 10.0;
  }
  EXPECT_GE(mean, 1.8);
  EXPECT_LE(mean, 2.2);
}

TEST(TwoNN, StronglyCorrelatedArFarBelowAmbient) {
  double mean = 0.0;
  for (int s = 0; s < 10; ++s) mean += twonn_estimate(ar_sample(50, 0.99, 5000, 200 + s)).value / 10.0;
  EXPECT_LT(mean, 25.0);
}

TEST(TwoNN, ScaleAndIsometryInvariance) {
  Rng rng(3);
  Matrix x = standard_normal_sample(rng, 500, 4);
  const double base = twonn_estimate(x).value;
  EXPECT_NEAR(twonn_estimate(x * 37.5).value, base, 1e-9);
  Matrix moved = (x * random_rotation(4, rng)).rowwise() + Vector::Constant(4, 3.0).transpose();
  EXPECT_NEAR(twonn_estimate(moved).value, base, 1e-9);
}

TEST(TwoNN, Degenerate) {
  EXPECT_THROW(twonn_estimate(Matrix::Zero(10, 2)), NotEnoughRows);
  EXPECT_THROW(twonn_estimate(Matrix::Zero(30, 2)), DegenerateData);
  EXPECT_THROW(twonn_estimate(Matrix::Zero(30, 2), 1.0), InvalidArgument);
}

TEST(TwoNN, DuplicatesAreDropped) {
  Rng rng(4);
  Matrix x = standard_normal_sample(rng, 400, 2);
  Matrix y(450, 2);
  y << x, x.topRows(50);
  IdEstimate e = twonn_estimate(y);
  EXPECT_LE(e.n_points, 350);  // duplicated pairs also make r1 == r2 for their neighbours
  EXPECT_GT(e.n_points, 250);
  EXPECT_NEAR(e.value, twonn_estimate(x).value, 0.5);
}

TEST(Mle, SegmentInR3) {
  Rng rng(5);
  Matrix x(2000, 3);
  for (Index i = 0; i < 2000; ++i) {
    const double t = rng.uniform();
    x.row(i) << t, 2.0 * t, -t;
  }
  const double e = mle_estimate(x, 10).value;
  EXPECT_GE(e, 0.9);
  EXPECT_LE(e, 1.2);
}

TEST(Mle, GaussianFive) {
  Rng rng(6);
  const double e = mle_estimate(standard_normal_sample(rng, 5000, 5), 10).value;
  EXPECT_GE(e, 4.0);
  EXPECT_LE(e, 6.0);
  Rng rng2(6);
  const double m = mle_estimate(standard_normal_sample(rng2, 5000, 5), 10, MleAggregation::mean).value;
  EXPECT_GT(m, e);  // mean of inverses is biased upward relative to MacKay
}

TEST(Mle, IsometryInvariance) {
  Rng rng(7);
  Matrix x = standard_normal_sample(rng, 300, 3);
  const double base = mle_estimate(x, 10).value;
  Matrix moved = (x * random_rotation(3, rng)).rowwise() + Vector::Constant(3, -2.0).transpose();
  EXPECT_NEAR(mle_estimate(moved, 10).value, base, 1e-9);
}

TEST(Mle, Degenerate) {
  Matrix x = Matrix::Zero(40, 2);
  x(0, 0) = 1.0;
  EXPECT_THROW(mle_estimate(x, 5), DegenerateData);
  EXPECT_THROW(mle_estimate(x, 1), InvalidArgument);
}

TEST(DRatio, PublishedRatios) {
  // Published ratios are truncated to three decimals.
  auto shown = [](double r) { return std::floor(r * 1000.0) / 1000.0; };
  EXPECT_DOUBLE_EQ(shown(d_ratio(15, 784).ratio), 0.019);
  EXPECT_DOUBLE_EQ(shown(d_ratio(11, 3072).ratio), 0.003);
  EXPECT_NEAR(d_ratio(7, 10).ratio, 0.700, 1e-12);
  EXPECT_EQ(d_ratio(12, 12).ratio, 1.0);
  EXPECT_THROW(d_ratio(1, 0), InvalidArgument);
}

TEST(Correlation, EstimatesFallWithRho) {
  const std::vector<double> rhos{0.0, 0.5, 0.9, 0.99};
  std::vector<double> two(4, 0.0), mle(4, 0.0);
  for (std::size_t r = 0; r < 4; ++r)
    for (int s = 0; s < 10; ++s) {
      Matrix x = ar_sample(10, rhos[r], 5000, 300 + static_cast<std::uint64_t>(s));
      two[r] += twonn_estimate(x).value / 10.0;
      mle[r] += mle_estimate(x, 10).value / 10.0;
    }
  for (std::size_t r = 1; r < 4; ++r) {
    EXPECT_LE(two[r], two[r - 1]) << "rho " << rhos[r];
    EXPECT_LE(mle[r], mle[r - 1]) << "rho " << rhos[r];
  }
}

TEST(Robustness, SubsampleAndScalerSpread) {
  Rng rng(8);
  Matrix x = standard_normal_sample(rng, 4000, 5);
  RobustnessSpec spec;
  auto cells = robustness_suite(x, spec, 9);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[3].rows, 2000);
  EXPECT_LE(estimate_spread(cells), 1.0);
  spec.subsample_ratios = {1.0};
  spec.scalers = {ScalerKind::none, ScalerKind::standard, ScalerKind::minmax};
  EXPECT_LE(estimate_spread(robustness_suite(x, spec, 9)), 1.0);
  spec.scalers = {ScalerKind::none};
  EXPECT_EQ(robustness_suite(x, spec, 9)[0].estimate.value, robustness_suite(x, spec, 10)[0].estimate.value);
  spec.subsample_ratios = {0.0};
  EXPECT_THROW(robustness_suite(x, spec, 9), InvalidArgument);
}
