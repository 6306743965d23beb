#pragma once

#include "flowbench/data/dataset.hpp"
#include "flowbench/data/scaler.hpp"
#include "flowbench/flow/flow_model.hpp"
#include "flowbench/scoring/metrics.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flowbench {

enum class TestKind { slt, typicality };
std::string_view to_string(TestKind t);
TestKind parse_test_kind(std::string_view name);

struct BenchmarkConfig {
  std::vector<std::string> datasets;  // CSV paths
  std::string label_column = "label";
  FlowKind kind = FlowKind::nice;
  ScalerKind scaler = ScalerKind::robust;
  TestKind test = TestKind::slt;
  TrainConfig train;
  int trials = 10;
  double contamination = 0.0;
  std::uint64_t master_seed = 0;
  int jobs = 1;
};

struct TrialResult {
  std::string dataset;
  int trial = 0;
  std::uint64_t seed = 0;  // master_seed + trial
  EvalReport report;
};

struct DatasetSummary {
  std::string dataset;
  int trials = 0;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;  // population std over trials
  double auprc_mean = 0.0;
  double auprc_std = 0.0;
};

struct BenchmarkResult {
  std::vector<TrialResult> trials;  // dataset order of the config, then trial
  std::vector<DatasetSummary> summary;
};

/// One Zong split, train, score and evaluate cycle. The split uses
/// derive_seed(seed, 0) and training derive_seed(seed, 1).
EvalReport run_trial(const LabeledDataset& data, const BenchmarkConfig& config, std::uint64_t seed);

/// All trials on in-memory datasets, fanned out over config.jobs threads.
BenchmarkResult run_benchmark(const std::vector<LabeledDataset>& datasets, const BenchmarkConfig& config);

/// Loads config.datasets and runs them. Errors name the dataset at fault.
BenchmarkResult run_benchmark(const BenchmarkConfig& config);

DatasetSummary summarise(const std::string& dataset, const std::vector<EvalReport>& reports);

}  // namespace flowbench
