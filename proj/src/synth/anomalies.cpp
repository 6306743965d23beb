#include "flowbench/synth/anomalies.hpp"

#include "flowbench/data/scaler.hpp"
#include "flowbench/error.hpp"

#include <algorithm>
#include <cmath>

namespace flowbench {

std::string to_string(AnomalyType t) {
  switch (t) {
    case AnomalyType::local: return "local";
    case AnomalyType::global: return "global";
    case AnomalyType::dependency: return "dependency";
    case AnomalyType::clustered: return "clustered";
  }
  return "unknown";
}

AnomalyType parse_anomaly_type(const std::string& name) {
  if (name == "local") return AnomalyType::local;
  if (name == "global") return AnomalyType::global;
  if (name == "dependency") return AnomalyType::dependency;
  if (name == "clustered") return AnomalyType::clustered;
  throw InvalidArgument("unknown anomaly type '" + name + "'");
}

double default_alpha(AnomalyType t) {
  switch (t) {
    case AnomalyType::local: return 5.0;
    case AnomalyType::global: return 1.1;
    case AnomalyType::clustered: return 5.0;
    case AnomalyType::dependency: return 1.0;
  }
  return 1.0;
}

double silverman_bandwidth(const Vector& column) {
  const Index n = column.size();
  if (n < 2) throw NotEnoughRows("bandwidth needs at least 2 values");
  const double mean = column.mean();
  const double sd = std::sqrt((column.array() - mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> v(column.data(), column.data() + n);
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

Matrix sample_independent_kde(const Matrix& x, Rng& rng, Index n) {
  const Index m = x.rows(), d = x.cols();
  Vector h(d);
  for (Index j = 0; j < d; ++j) h(j) = silverman_bandwidth(x.col(j));
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) {
      const Index src = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
      out(i, j) = x(src, j) + h(j) * rng.normal();
    }
  return out;
}

LabeledDataset gen_anomaly_suite(const Matrix& x_seed, const AnomalySuiteSpec& spec) {
  if (spec.n_normal < 1 || spec.n_anomaly < 1) throw InvalidArgument("normal and anomaly counts must be positive");
  if (spec.gmm_components < 1) throw InvalidArgument("GMM needs at least one component");
  if (x_seed.rows() < 10 * static_cast<Index>(spec.gmm_components))
    throw NotEnoughRows("seed data needs at least 10 rows per GMM component");
  const double alpha = spec.alpha > 0.0 ? spec.alpha : default_alpha(spec.type);
  if (spec.alpha < 0.0) throw InvalidArgument("alpha must be positive");

  Rng rng(derive_seed(spec.seed, 1));
  const Index d = x_seed.cols();
  LabeledDataset out;
  out.features.resize(spec.n_normal + spec.n_anomaly, d);

  Matrix normals, anomalies;
  if (spec.type == AnomalyType::dependency) {
    if (spec.n_normal > x_seed.rows())
      throw InvalidArgument("dependency normals are seed rows; asked for " + std::to_string(spec.n_normal) +
                            " of " + std::to_string(x_seed.rows()));
    const auto perm = random_permutation(rng, x_seed.rows());
    normals.resize(spec.n_normal, d);
    for (Index i = 0; i < spec.n_normal; ++i) normals.row(i) = x_seed.row(perm[static_cast<std::size_t>(i)]);
    anomalies = sample_independent_kde(x_seed, rng, spec.n_anomaly);
  } else {
    const GmmDiag g = fit_gmm_diag(x_seed, spec.gmm_components, derive_seed(spec.seed, 0)).gmm;
    normals = sample_gmm(g, rng, spec.n_normal);
    switch (spec.type) {
      case AnomalyType::local:
        anomalies = sample_gmm(g, rng, spec.n_anomaly, 1.0, alpha);
        break;
      case AnomalyType::clustered:
        anomalies = sample_gmm(g, rng, spec.n_anomaly, alpha, 1.0);
        break;
      case AnomalyType::global: {
        anomalies.resize(spec.n_anomaly, d);
        for (Index j = 0; j < d; ++j) {
          const double lo = alpha * normals.col(j).minCoeff();
          const double hi = alpha * normals.col(j).maxCoeff();
          for (Index i = 0; i < spec.n_anomaly; ++i) anomalies(i, j) = rng.uniform(lo, hi);
        }
        break;
      }
      case AnomalyType::dependency:
        break;
    }
  }
  out.features.topRows(spec.n_normal) = normals;
  out.features.bottomRows(spec.n_anomaly) = anomalies;
  out.labels.assign(static_cast<std::size_t>(spec.n_normal), 0);
  out.labels.resize(static_cast<std::size_t>(spec.n_normal + spec.n_anomaly), 1);
  for (Index j = 0; j < d; ++j) out.feature_names.push_back("x" + std::to_string(j));
  out.name = "synthetic_" + to_string(spec.type);
  return out;
}

}  // namespace flowbench
