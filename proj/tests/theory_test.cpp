#include "flowbench/theory/theory.hpp"

#include "flowbench/error.hpp"
#include "flowbench/numeric/linalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace flowbench;

namespace {

long total(const std::vector<long>& c) {
  long s = 0;
  for (long v : c) s += v;
  return s;
}

}  // namespace

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(gaussian_entropy(1, 1.0), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-14);
  EXPECT_NEAR(gaussian_entropy(1, 1.0), 1.4189385, 1e-7);
  EXPECT_NEAR(gaussian_entropy(2, 1.0), 2.8378771, 1e-7);
  for (Index d : {1, 3, 17}) {
    EXPECT_NEAR(gaussian_entropy(d, 2.6) - gaussian_entropy(d, 1.3), d * std::log(2.0), 1e-12);
    EXPECT_NEAR(gaussian_entropy(d, 0.7), oracle::gaussian_entropy(d, 0.7), 1e-12);
  }
  EXPECT_THROW(gaussian_entropy(3, 0.0), InvalidArgument);
}

TEST(Entropy, CholeskyFormMatchesIsotropic) {
  GaussianSpec iso = GaussianSpec::isotropic(4, 0.3, 1.7);
  GaussianSpec full{iso.mean, 1.0, Matrix::Identity(4, 4) * 1.7};
  EXPECT_NEAR(gaussian_entropy(full), gaussian_entropy(iso), 1e-12);
}

TEST(KlDivergence, KnownValues) {
  EXPECT_DOUBLE_EQ(gaussian_kl_isotropic(0.4, 1.3, 0.4, 1.3, 6), 0.0);
  EXPECT_NEAR(gaussian_kl_isotropic(0.0, 1.0, 1.0, 1.0, 1), 0.5, 1e-15);
  GaussianSpec p = GaussianSpec::isotropic(3, 0.0, 2.0);
  GaussianSpec q = GaussianSpec::isotropic(3, 0.5, 0.8);
  GaussianSpec q_full{q.mean, 1.0, Matrix::Identity(3, 3) * 0.8};
  EXPECT_NEAR(gaussian_kl(q_full, p), gaussian_kl(q, p), 1e-12);
}

TEST(KlDivergence, MonteCarloAgrees) {
  GaussianSpec p = GaussianSpec::isotropic(3, 0.0, 1.5);
  GaussianSpec q = GaussianSpec::isotropic(3, 0.7, 1.0);
  const double exact = gaussian_kl(q, p);
  MonteCarloEstimate mc = mc_kl(q, p, 1'000'000, 11);
  EXPECT_LT(std::abs(mc.mean - exact), 3 * mc.se);
  EXPECT_LT(std::abs(mc.mean - exact), 0.01 * exact);
}

TEST(KlDivergence, CorrelatedSpecMatchesMonteCarlo) {
  Matrix cov = ar_covariance(4, 0.6);
  GaussianSpec q{Vector::Constant(4, 0.2), 1.0, cholesky(cov)};
  GaussianSpec p = GaussianSpec::isotropic(4, 0.0, 1.2);
  MonteCarloEstimate mc = mc_kl(q, p, 400'000, 3);
  EXPECT_LT(std::abs(mc.mean - gaussian_kl(q, p)), 3 * mc.se);
  MonteCarloEstimate h = mc_entropy(q, 400'000, 4);
  EXPECT_LT(std::abs(h.mean - gaussian_entropy(q)), 3 * h.se);
}

TEST(LogDensity, MatchesScalarFormula) {
  GaussianSpec g = GaussianSpec::isotropic(2, 1.0, 2.0);
  Matrix x(1, 2);
  x << 1.5, -0.5;
  const double expect = -std::log(2 * std::numbers::pi * 4.0) - 0.5 * (0.25 + 2.25) / 4.0;
  EXPECT_NEAR(gaussian_log_density(g, x)(0), expect, 1e-13);
  EXPECT_THROW(gaussian_log_density(g, Matrix::Zero(1, 3)), DimMismatch);
}

TEST(GapCondition, Examples) {
  Vector mu_p = Vector::Zero(10);
  Vector mu_q = Vector::Zero(10);
  mu_q(0) = 2.0;
  mu_q(1) = 1.0;  // ||dmu||^2 = 5
  GapCondition g = gap_condition(mu_p, 2.0, mu_q, 1.0);
  EXPECT_TRUE(g.holds);
  EXPECT_DOUBLE_EQ(g.margin, 25.0);
  EXPECT_TRUE(g.direct_holds);
  EXPECT_TRUE(g.routes_agree);

  EXPECT_FALSE(gap_condition(0.0, 1.3, 0.1, 1.3, 5).holds);

  Vector at = Vector::Zero(3);
  at(0) = 3.0;  // ||dmu||^2 = 9 = 3 * (4 - 1)
  GapCondition b = gap_condition(Vector::Zero(3), 2.0, at, 1.0);
  EXPECT_FALSE(b.holds);
  EXPECT_DOUBLE_EQ(b.margin, 0.0);
  EXPECT_TRUE(b.routes_agree);
}

TEST(GapCondition, RoutesAgreeOnRandomSpecs) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const Index d = 1 + static_cast<Index>(rng.below(40));
    Vector mu_p(d), mu_q(d);
    for (Index j = 0; j < d; ++j) {
      mu_p(j) = rng.normal();
      mu_q(j) = mu_p(j) + 0.5 * rng.normal();
    }
    const double sp = rng.uniform(0.2, 3.0);
    const double sq = rng.uniform(0.2, 3.0);
    GapCondition g = gap_condition(mu_p, sp, mu_q, sq);
    ASSERT_TRUE(g.routes_agree) << "case " << i;
    ASSERT_EQ(g.holds, g.direct_holds) << "case " << i;
    EXPECT_NEAR(g.direct_margin, g.margin / (2 * sp * sp), 1e-9 * (1 + std::abs(g.margin)));
  }
}

TEST(LikelihoodGap, PerfectModelSameDistribution) {
  GaussianSpec p = GaussianSpec::isotropic(5, 0.0, 1.0);
  GapReport r = empirical_likelihood_gap(p, p, p, 200'000, 1);
  EXPECT_LT(std::abs(r.gap), 3 * r.gap_se);
  EXPECT_DOUBLE_EQ(r.analytic_gap, 0.0);
}

TEST(LikelihoodGap, PerfectModelMatchesClosedForm) {
  GaussianSpec p = GaussianSpec::isotropic(8, 0.0, 1.5);
  GaussianSpec q = GaussianSpec::isotropic(8, 0.3, 1.0);
  ASSERT_TRUE(gap_condition(p.mean, p.sigma, q.mean, q.sigma).holds);
  GapReport r = empirical_likelihood_gap(p, p, q, 500'000, 2);
  EXPECT_LT(r.analytic_gap, 0.0);
  EXPECT_LT(r.gap, 0.0);
  EXPECT_LT(std::abs(r.gap - r.analytic_gap), 3 * r.gap_se);
  EXPECT_DOUBLE_EQ(r.analytic_gap, -(r.entropy_p - r.entropy_q - r.kl_qp));
}

TEST(LikelihoodGap, AnalyticGapLinearInDimension) {
  const double g1 = [] {
    GaussianSpec p = GaussianSpec::isotropic(1, 0.0, 1.5);
    GaussianSpec q = GaussianSpec::isotropic(1, 0.3, 1.0);
    return gaussian_kl(q, p) + gaussian_entropy(q) - gaussian_entropy(p);
  }();
  for (Index d : {5, 10, 20, 40}) {
    GaussianSpec p = GaussianSpec::isotropic(d, 0.0, 1.5);
    GaussianSpec q = GaussianSpec::isotropic(d, 0.3, 1.0);
    const double gd = gaussian_kl(q, p) + gaussian_entropy(q) - gaussian_entropy(p);
    EXPECT_NEAR(gd, d * g1, 1e-12 * d);
  }
}

TEST(LikelihoodGap, IdentityFlowIsStandardNormalModel) {
  Rng rng(6);
  TrainConfig c;
  c.n_coupling = 2;
  c.hidden_dim = 8;
  FlowModel m = build_flow(FlowKind::realnvp, 4, c, rng);
  ScalerState none{ScalerKind::none, Vector::Zero(4), Vector::Ones(4)};
  GaussianSpec p = GaussianSpec::isotropic(4, 0.0, 1.0);
  GaussianSpec q = GaussianSpec::isotropic(4, 0.5, 0.5);
  GapReport flow = empirical_likelihood_gap(m, none, p, q, 50'000, 9);
  GapReport exact = empirical_likelihood_gap(p, p, q, 50'000, 9);
  EXPECT_NEAR(flow.gap, exact.gap, 1e-9);
  EXPECT_THROW(empirical_likelihood_gap(m, none, GaussianSpec::isotropic(3, 0, 1), GaussianSpec::isotropic(3, 0, 1),
                                        10, 1),
               DimMismatch);
}

TEST(Concentration, BoundAndEmpirical) {
  ConcentrationReport r = concentration_check(100, 50.0, 100'000, 5);
  EXPECT_NEAR(r.bound, 2 * std::exp(-3.125), 1e-15);
  EXPECT_NEAR(r.bound, 0.0878, 1e-4);
  EXPECT_TRUE(r.within_bound);
  EXPECT_GE(r.empirical, 0.0);
  EXPECT_LE(r.empirical, 1.0);

  ConcentrationReport deep = concentration_check(50, 49.0, 20'000, 6);
  EXPECT_LT(deep.bound, 1e-2);
  EXPECT_LT(deep.empirical, 1e-3);

  ConcentrationReport vac = concentration_check(10, 5.0, 100'000, 7);
  EXPECT_NEAR(vac.bound, 2 * std::exp(-0.3125), 1e-15);
  EXPECT_GT(vac.bound, 1.0);
  EXPECT_TRUE(vac.within_bound);

  EXPECT_THROW(concentration_check(10, 10.0, 10, 1), TOutOfRange);
  EXPECT_THROW(concentration_check(10, 0.0, 10, 1), TOutOfRange);
}

TEST(Concentration, GridNeverViolated) {
  std::uint64_t seed = 100;
  for (Index d : {5, 20, 50, 100, 200})
    for (double frac : {0.1, 0.3, 0.6, 0.9}) {
      ConcentrationReport r = concentration_check(d, frac * d, 20'000, seed++);
      EXPECT_TRUE(r.within_bound) << "d=" << d << " t=" << r.t;
    }
}

TEST(NormVariance, HalfNormalAtDimensionOne) {
  auto s = norm_variance_ratio({1}, 200'000, 3);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_LT(std::abs(s[0].ratio - (1 - 2 / std::numbers::pi)), 3 * s[0].se);
}

TEST(NormVariance, DecreasingInDimension) {
  auto s = norm_variance_ratio({10, 100, 1000}, 100'000, 8);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& v : s) EXPECT_GT(v.ratio, 0.0);
  for (std::size_t i = 1; i < s.size(); ++i)
    EXPECT_LT(s[i].ratio + 2 * s[i].se, s[i - 1].ratio - 2 * s[i - 1].se);
}

TEST(Histogram, CountsAndDegenerateRange) {
  Vector a = Vector::LinSpaced(100, 0.0, 1.0);
  Vector b = Vector::LinSpaced(37, 0.5, 2.0);
  Histogram h = make_histogram("norm", a, b, 10);
  EXPECT_EQ(h.edges.size(), 11u);
  EXPECT_EQ(total(h.count_normal), 100);
  EXPECT_EQ(total(h.count_anomaly), 37);
  EXPECT_DOUBLE_EQ(h.edges.front(), 0.0);
  EXPECT_DOUBLE_EQ(h.edges.back(), 2.0);

  Histogram flat = make_histogram("logdet", Vector::Constant(5, 3.0), Vector::Constant(4, 3.0), 20);
  EXPECT_EQ(flat.count_normal.size(), 1u);
  EXPECT_EQ(total(flat.count_normal), 5);
  EXPECT_DOUBLE_EQ(histogram_w1(flat), 0.0);
}

TEST(Histogram, WassersteinOfPointMasses) {
  Histogram same = make_histogram("x", Vector::LinSpaced(50, 0, 1), Vector::LinSpaced(50, 0, 1), 25);
  EXPECT_NEAR(histogram_w1(same), 0.0, 1e-15);
  // All normal mass in the first bin, all anomaly mass in the last.
  Histogram apart = make_histogram("x", Vector::Zero(10), Vector::Constant(10, 4.0), 4);
  EXPECT_NEAR(histogram_w1(apart), 3.0, 1e-12);
}

TEST(DimensionSweep, SameDistributionIsChance) {
  DimensionSweepSpec s;
  s.dims = {10, 40};
  s.n_train = 1000;
  s.n_test_each = 2000;
  s.seed = 12;
  TrainConfig c;
  c.epochs = 5;
  c.n_coupling = 2;
  c.hidden_dim = 16;
  c.batch_size = 256;
  auto cells = dimension_sweep_auroc(FlowKind::nice, s, c);
  ASSERT_EQ(cells.size(), 2u);
  for (const auto& cell : cells) {
    EXPECT_NEAR(cell.auroc, 0.5, 0.03) << "d=" << cell.d;
    EXPECT_EQ(total(cell.histograms.norm.count_normal), 2000);
    EXPECT_EQ(total(cell.histograms.nll.count_anomaly), 2000);
    EXPECT_FALSE(cell.histograms.logdet.has_value());
  }
}

TEST(DimensionSweep, ParallelMatchesSerialAndRealNvpHasVolume) {
  DimensionSweepSpec s;
  s.dims = {4, 9};
  s.mu_q = 1.0;
  s.n_train = 300;
  s.n_test_each = 200;
  s.seed = 3;
  TrainConfig c;
  c.epochs = 3;
  c.n_coupling = 2;
  c.hidden_dim = 8;
  c.batch_size = 64;
  SweepOptions serial;
  SweepOptions par;
  par.jobs = 2;
  auto a = dimension_sweep_auroc(FlowKind::realnvp, s, c, serial);
  auto b = dimension_sweep_auroc(FlowKind::realnvp, s, c, par);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].auroc, b[i].auroc);
    EXPECT_EQ(a[i].histograms.nll.count_normal, b[i].histograms.nll.count_normal);
    ASSERT_TRUE(a[i].histograms.logdet.has_value());
    EXPECT_EQ(total(a[i].histograms.logdet->count_anomaly), 200);
  }
  EXPECT_GT(a[0].auroc, 0.6);
}

TEST(DimensionSweep, RejectsUnsortedDims) {
  DimensionSweepSpec s;
  s.dims = {10, 5};
  EXPECT_THROW(dimension_sweep_auroc(FlowKind::nice, s, TrainConfig{}), InvalidArgument);
}
