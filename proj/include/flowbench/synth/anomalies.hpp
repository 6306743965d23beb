#pragma once

#include "flowbench/data/dataset.hpp"
#include "flowbench/synth/gmm.hpp"

#include <cstdint>
#include <string>

namespace flowbench {

enum class AnomalyType { local, global, dependency, clustered };

std::string to_string(AnomalyType t);
AnomalyType parse_anomaly_type(const std::string& name);

/// Default alpha: local 5, global 1.1, clustered 5; dependency has none.
double default_alpha(AnomalyType t);

struct AnomalySuiteSpec {
  AnomalyType type = AnomalyType::local;
  double alpha = 0.0;  // 0 selects default_alpha(type)
  Index n_normal = 1000;
  Index n_anomaly = 100;
  int gmm_components = 5;
  std::uint64_t seed = 0;
};

/// Normals are sampled from a diagonal GMM fitted to `x_seed`, except for the
/// dependency type, which uses a seeded subsample of the seed rows directly.
/// Normals come first, then anomalies.
LabeledDataset gen_anomaly_suite(const Matrix& x_seed, const AnomalySuiteSpec& spec);

/// Silverman's rule: 0.9 * min(std, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(const Vector& column);

/// Each feature drawn independently from its own Gaussian KDE.
Matrix sample_independent_kde(const Matrix& x, Rng& rng, Index n);

}  // namespace flowbench
