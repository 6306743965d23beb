#pragma once

#include "flowbench/numeric/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flowbench {

struct EvalReport {
  double auroc = 0.0;
  double auprc = 0.0;
  Index n_normal = 0;
  Index n_anomaly = 0;
  std::uint64_t seed = 0;
};

/// Mann-Whitney estimate of P(anomaly score > normal score), ties count 1/2.
double auroc(std::span<const double> scores, std::span<const int> labels);
/// Step-wise average precision; tied scores form a single threshold.
double auprc(std::span<const double> scores, std::span<const int> labels);

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels, std::uint64_t seed = 0);

inline double auroc(const Vector& scores, const std::vector<int>& labels) { return auroc(as_span(scores), labels); }
inline double auprc(const Vector& scores, const std::vector<int>& labels) { return auprc(as_span(scores), labels); }
inline EvalReport evaluate(const Vector& scores, const std::vector<int>& labels, std::uint64_t seed = 0) {
  return evaluate(as_span(scores), labels, seed);
}

/// Datasets by models. Missing cells are NaN.
struct AurocMatrix {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  Matrix values;

  Index model_index(const std::string& name) const;  // -1 when absent
};

/// First column names the dataset; the header names the models. Empty, "NA"
/// and "nan" cells load as missing.
AurocMatrix read_auroc_matrix(const std::filesystem::path& path);
AurocMatrix parse_auroc_matrix(const std::string& text);

struct RankTable {
  std::vector<std::string> models;
  std::vector<std::string> datasets;
  Matrix ranks;  // datasets by models, 1 = best, ties share the mean rank
  Vector avg_rank;
  Vector top2_ratio;
  Vector fail_ratio;
  double fail_threshold = 9.0;
};

RankTable rank_table(const AurocMatrix& m, double fail_threshold = 9.0);

}  // namespace flowbench
