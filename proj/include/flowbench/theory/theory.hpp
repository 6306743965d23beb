#pragma once

#include "flowbench/data/scaler.hpp"
#include "flowbench/flow/flow_model.hpp"
#include "flowbench/synth/gaussian.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowbench {

// All quantities are in nats.

/// (d/2) ln(2 pi e sigma^2).
double gaussian_entropy(Index d, double sigma);
/// Entropy of an arbitrary GaussianSpec (isotropic or Cholesky form).
double gaussian_entropy(const GaussianSpec& g);

/// KL(Q || P) for isotropic Gaussians with mean vectors mu_p, mu_q.
double gaussian_kl_isotropic(const Vector& mu_p, double sigma_p, const Vector& mu_q, double sigma_q);
/// Same with means broadcast to mu * 1_d.
double gaussian_kl_isotropic(double mu_p, double sigma_p, double mu_q, double sigma_q, Index d);
/// KL(Q || P) for general GaussianSpecs.
double gaussian_kl(const GaussianSpec& q, const GaussianSpec& p);

/// Per-row log N(x; mean, cov) of a GaussianSpec.
Vector gaussian_log_density(const GaussianSpec& g, const Matrix& x);

struct GapCondition {
  bool holds = false;         // ||dmu||^2 < d (sigma_p^2 - sigma_q^2)
  double margin = 0.0;        // d (sigma_p^2 - sigma_q^2) - ||dmu||^2
  bool direct_holds = false;  // H(P) - H(Q) > KL(Q || P), evaluated term by term
  double direct_margin = 0.0; // H(P) - H(Q) - KL(Q || P)
  /// The two routes agree in sign; exact ties on the boundary count as
  /// agreement when the direct margin is within rounding of zero.
  bool routes_agree = false;
};

GapCondition gap_condition(const Vector& mu_p, double sigma_p, const Vector& mu_q, double sigma_q);
GapCondition gap_condition(double mu_p, double sigma_p, double mu_q, double sigma_q, Index d);

struct MonteCarloEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  long n = 0;
};

/// -E[log g(X)] from n draws of g.
MonteCarloEstimate mc_entropy(const GaussianSpec& g, long n, std::uint64_t seed);
/// E_Q[log q - log p] from n draws of q.
MonteCarloEstimate mc_kl(const GaussianSpec& q, const GaussianSpec& p, long n, std::uint64_t seed);

struct GapReport {
  Index d = 0;
  long n = 0;
  double entropy_p = 0.0;
  double entropy_q = 0.0;
  double kl_qp = 0.0;
  double mean_ll_p = 0.0;  // E_P[log p_theta]
  double mean_ll_q = 0.0;  // E_Q[log p_theta]
  double gap = 0.0;        // mean_ll_p - mean_ll_q
  double gap_se = 0.0;
  /// KL(Q||P) + H(Q) - H(P): the gap a perfect model of P would show.
  double analytic_gap = 0.0;
};

/// Likelihood gap with p_theta = the analytic density `model`.
GapReport empirical_likelihood_gap(const GaussianSpec& model, const GaussianSpec& p, const GaussianSpec& q, long n,
                                   std::uint64_t seed);
/// Likelihood gap with p_theta = a trained flow applied after `scaler`. The
/// log-likelihood is that of the scaled rows.
GapReport empirical_likelihood_gap(const FlowModel& model, const ScalerState& scaler, const GaussianSpec& p,
                                   const GaussianSpec& q, long n, std::uint64_t seed);

struct ConcentrationReport {
  Index d = 0;
  double t = 0.0;
  long n = 0;
  double empirical = 0.0;  // fraction of draws with | ||Z||^2 - d | >= t
  double bound = 0.0;      // 2 exp(-t^2 / 8d)
  double se = 0.0;         // binomial standard error of `empirical`
  bool within_bound = false;  // empirical <= bound + 3 se
};

ConcentrationReport concentration_check(Index d, double t, long n, std::uint64_t seed);

struct NormVariance {
  Index d = 0;
  double ratio = 0.0;  // Var(||Z||) / d
  double se = 0.0;
};

/// Sample variance of ||Z||_2 over n standard-normal draws, divided by d.
/// Each dimension uses its own stream derive_seed(seed, d).
std::vector<NormVariance> norm_variance_ratio(const std::vector<Index>& dims, long n, std::uint64_t seed);

/// Two-colour histogram on shared bins.
struct Histogram {
  std::string quantity;
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<long> count_normal;
  std::vector<long> count_anomaly;
};

/// Equal-width bins over the pooled range. A degenerate range gets a single
/// unit-width bin centred on the common value.
Histogram make_histogram(const std::string& quantity, const Vector& normal, const Vector& anomaly, int bins);

/// Wasserstein-1 distance between the two normalised histograms, with the
/// mass of each bin at its centre.
double histogram_w1(const Histogram& h);

struct HistogramSet {
  Histogram nll;
  Histogram norm;
  std::optional<Histogram> logdet;  // realnvp only; NICE logdet is constant
};

struct SweepCell {
  Index d = 0;
  double auroc = 0.0;
  double norm_w1 = 0.0;  // W1 between latent-norm histograms
  HistogramSet histograms;
};

struct SweepOptions {
  ScalerKind scaler = ScalerKind::none;
  int bins = 50;
  /// Divide latent norms by sqrt(d) so histograms are comparable across d.
  bool normalise_norm = true;
  int jobs = 1;
};

/// For each d: generate the Gaussian pair, train a flow on P, score the test
/// rows by NLL and record AUROC plus histograms. Cells are independent and
/// seeded from (spec.seed, d); the training seed is derive_seed(cell, 1).
std::vector<SweepCell> dimension_sweep_auroc(FlowKind kind, const DimensionSweepSpec& spec,
                                             const TrainConfig& config, const SweepOptions& options = {});

}  // namespace flowbench
