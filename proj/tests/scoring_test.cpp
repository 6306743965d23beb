#include "flowbench/error.hpp"
#include "flowbench/flow/train.hpp"
#include "flowbench/scoring/metrics.hpp"
#include "flowbench/scoring/scorers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowbench;

namespace {

double auroc_v(const std::vector<double>& s, const std::vector<int>& l) { return auroc(s, l); }
double auprc_v(const std::vector<double>& s, const std::vector<int>& l) { return auprc(s, l); }

}  // namespace

TEST(Auroc, HandCases) {
  EXPECT_EQ(auroc_v({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auroc_v({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1}), 0.5);
  EXPECT_EQ(auroc_v({0.5, 0.9, 0.7}, {0, 0, 1}), 0.5);
  EXPECT_EQ(auroc_v({0.9, 0.1}, {0, 1}), 0.0);
}

TEST(Auroc, Errors) {
  EXPECT_THROW(auroc_v({0.1, 0.2}, {0, 0}), SingleClass);
  EXPECT_THROW(auroc_v({0.1, 0.2}, {1, 1}), SingleClass);
  EXPECT_THROW(auroc_v({0.1}, {0, 1}), DimMismatch);
  EXPECT_THROW(auroc_v({0.1, NAN}, {0, 1}), InvalidArgument);
  EXPECT_THROW(auprc_v({0.1, 0.2}, {0, 0}), SingleClass);
}

TEST(Auroc, MatchesPairwiseOracle) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<int> l(n);
    const bool coarse = t % 2 == 0;  // heavy ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(5)) : rng.normal();
      l[i] = static_cast<int>(rng.below(2));
    }
    l[0] = 0;
    l[1] = 1;
    EXPECT_DOUBLE_EQ(auroc_v(s, l), oracle::pairwise_auroc(s, l));
  }
}

TEST(Auroc, MonotoneInvarianceAndComplement) {
  Rng rng(2);
  std::vector<double> s(100), t(100), neg(100);
  std::vector<int> l(100);
  for (int i = 0; i < 100; ++i) {
    s[i] = rng.normal();
    t[i] = std::exp(3.0 * s[i]) + 7.0;
    neg[i] = -s[i];
    l[i] = i % 3 == 0;
  }
  EXPECT_DOUBLE_EQ(auroc_v(s, l), auroc_v(t, l));
  EXPECT_NEAR(auroc_v(s, l) + auroc_v(neg, l), 1.0, 1e-15);
}

TEST(Auprc, HandCases) {
  std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.95, 0.99};
  std::vector<int> l{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auprc_v(s, l), 1.0);
  EXPECT_DOUBLE_EQ(auprc_v({0.9, 0.1, 0.2, 0.3, 0.4}, {1, 0, 0, 0, 0}), 1.0);
  // anomaly ranked second of 3: AP = 1/2
  EXPECT_DOUBLE_EQ(auprc_v({0.9, 0.5, 0.1}, {0, 1, 0}), 0.5);
  // all tied: one threshold, precision = prevalence
  EXPECT_DOUBLE_EQ(auprc_v({1, 1, 1, 1}, {1, 0, 0, 0}), 0.25);
}

TEST(Auprc, MatchesBruteForce) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(100);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 ? static_cast<double>(rng.below(6)) : rng.uniform();
      l[i] = rng.uniform() < 0.3;
    }
    l[0] = 1;
    l[1] = 0;
    EXPECT_NEAR(auprc_v(s, l), oracle::brute_average_precision(s, l), 1e-12);
  }
}

TEST(Auprc, RandomScoresGivePrevalence) {
  Rng rng(4);
  const std::size_t n = 200000;
  std::vector<double> s(n);
  std::vector<int> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    l[i] = rng.uniform() < 0.1;
  }
  EXPECT_NEAR(auprc_v(s, l), 0.1, 0.005);
}

TEST(Evaluate, Counts) {
  EvalReport r = evaluate(std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 1}, 7);
  EXPECT_EQ(r.n_normal, 2);
  EXPECT_EQ(r.n_anomaly, 1);
  EXPECT_EQ(r.seed, 7u);
  EXPECT_EQ(r.auroc, 1.0);
}

TEST(RankTable, SimpleAndTies) {
  AurocMatrix m;
  m.models = {"a", "b", "c"};
  m.datasets = {"d1", "d2"};
  m.values.resize(2, 3);
  m.values << 0.9, 0.8, 0.7, 0.9, 0.9, 0.1;
  RankTable t = rank_table(m, 3);
  EXPECT_EQ(t.ranks(0, 0), 1.0);
  EXPECT_EQ(t.ranks(0, 1), 2.0);
  EXPECT_EQ(t.ranks(0, 2), 3.0);
  EXPECT_EQ(t.ranks(1, 0), 1.5);
  EXPECT_EQ(t.ranks(1, 1), 1.5);
  EXPECT_DOUBLE_EQ(t.avg_rank(0), 1.25);
  EXPECT_DOUBLE_EQ(t.top2_ratio(1), 1.0);
  EXPECT_DOUBLE_EQ(t.fail_ratio(2), 1.0);
  for (Index i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(t.ranks.row(i).sum(), 6.0);
}

TEST(RankTable, IncompleteMatrix) {
  AurocMatrix m = parse_auroc_matrix("dataset,a,b\nx,0.5,NA\n");
  EXPECT_TRUE(std::isnan(m.values(0, 1)));
  EXPECT_THROW(rank_table(m), IncompleteMatrix);
}

TEST(AurocMatrixIo, ParsesAndRejects) {
  AurocMatrix m = parse_auroc_matrix("# note\ndataset,a,b\nx,0.5,0.75\ny,1,0\n");
  EXPECT_EQ(m.models, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(m.datasets, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(m.values(0, 1), 0.75);
  EXPECT_EQ(m.model_index("b"), 1);
  EXPECT_EQ(m.model_index("zz"), -1);
  EXPECT_THROW(parse_auroc_matrix("dataset,a\nx,1.5\n"), ParseError);
  EXPECT_THROW(parse_auroc_matrix("dataset,a\nx,abc\n"), ParseError);
}

TEST(RankTable, FixtureSumsAndShape) {
  AurocMatrix m = read_auroc_matrix(FLOWBENCH_FIXTURES "/adbench_tabular_auroc.csv");
  ASSERT_EQ(m.values.cols(), 14);
  ASSERT_EQ(m.values.rows(), 47);
  RankTable t = rank_table(m);
  for (Index i = 0; i < t.ranks.rows(); ++i) EXPECT_DOUBLE_EQ(t.ranks.row(i).sum(), 14.0 * 15.0 / 2.0);
}

TEST(SltScore, OrderingReversesLikelihood) {
  TrainConfig c;
  c.n_coupling = 2;
  c.hidden_dim = 8;
  Rng rng(5);
  FlowModel m = build_flow(FlowKind::realnvp, 3, c, rng);
  perturb_parameters(m, rng, 0.3);
  Matrix x = standard_normal_sample(rng, 50, 3);
  ScalerState none{ScalerKind::none, Vector::Zero(3), Vector::Ones(3)};
  Vector s = slt_score(m, none, x).values;
  Vector ll = log_likelihood(m, x);
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(s(i), -ll(i));
  // Row order does not matter.
  Matrix rev = x.colwise().reverse();
  Vector sr = slt_score(m, none, rev).values;
  for (Index i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(sr(i), s(49 - i));
  EXPECT_THROW(slt_score(m, none, Matrix::Zero(2, 4)), DimMismatch);
}

TEST(SltScore, FarOutlierScoresAboveTrainingMedian) {
  TrainConfig c;
  c.n_coupling = 4;
  c.hidden_dim = 32;
  c.epochs = 10;
  c.batch_size = 128;
  Rng rng(6);
  Matrix x = standard_normal_sample(rng, 2000, 2);
  TrainResult r = train_flow(FlowKind::nice, x, c);
  ScalerState none{ScalerKind::none, Vector::Zero(2), Vector::Ones(2)};
  Vector s = slt_score(r.model, none, x).values;
  std::vector<double> v(s.data(), s.data() + s.size());
  std::nth_element(v.begin(), v.begin() + 1000, v.end());
  Matrix far(1, 2);
  far << 20.0, 0.0;
  EXPECT_GT(slt_score(r.model, none, far).values(0), v[1000]);
}

TEST(Typicality, ConstructedNll) {
  Vector nll(4);
  nll << 3.0, 5.0, 1.0, 3.0;
  Vector s = typicality_from_nll(nll, 3.0);
  EXPECT_EQ(s(0), 0.0);
  EXPECT_EQ(s(1), s(2));
  EXPECT_EQ(s(1), 2.0);
  // A between-modes point with unusually low NLL (high density) is flagged
  // more strongly than a typical one, unlike the plain likelihood score.
  Vector two(2);
  two << 0.5, 3.1;  // between-modes point, typical point
  Vector t = typicality_from_nll(two, 3.0);
  EXPECT_GT(t(0), t(1));
  EXPECT_LT(two(0), two(1));
}

TEST(Typicality, ModelPathAgrees) {
  TrainConfig c;
  c.n_coupling = 2;
  c.hidden_dim = 8;
  Rng rng(7);
  FlowModel m = build_flow(FlowKind::nice, 2, c, rng);
  perturb_parameters(m, rng, 0.2);
  Matrix xt = standard_normal_sample(rng, 30, 2), x = standard_normal_sample(rng, 10, 2);
  ScalerState none{ScalerKind::none, Vector::Zero(2), Vector::Ones(2)};
  const double h = -log_likelihood(m, xt).mean();
  Vector a = typicality_score(m, none, xt, x).values;
  Vector ll = log_likelihood(m, x);
  for (Index i = 0; i < 10; ++i) EXPECT_NEAR(a(i), std::abs(-ll(i) - h), 1e-12);
}

TEST(PcaBaseline, PlaneData) {
  Rng rng(8);
  Matrix coef = standard_normal_sample(rng, 100, 2);
  Matrix x = Matrix::Zero(100, 3);
  x.leftCols(2) = coef;
  Matrix probe(2, 3);
  probe << 0.3, -1.2, 0.0, 0.5, 0.5, 3.0;
  EXPECT_LT(pca_baseline_score(x, probe, 0.66).values(0), 1e-20);
  EXPECT_NEAR(pca_baseline_score(x, probe, 0.66).values(1), 9.0, 1e-12);
  EXPECT_LT(pca_baseline_score(x, probe, 1.0).values.cwiseAbs().maxCoeff(), 1e-20);
  EXPECT_THROW(pca_baseline_score(x.topRows(1), probe), NotEnoughRows);
  EXPECT_THROW(pca_baseline_score(x, probe, 0.0), InvalidArgument);
}
