#include "flowbench/cli/benchmark.hpp"

#include "flowbench/data/split.hpp"
#include "flowbench/error.hpp"
#include "flowbench/flow/train.hpp"
#include "flowbench/numeric/parallel.hpp"
#include "flowbench/numeric/rng.hpp"
#include "flowbench/scoring/scorers.hpp"

#include <cmath>
#include <filesystem>

namespace flowbench {

std::string_view to_string(TestKind t) { return t == TestKind::slt ? "slt" : "typicality"; }

TestKind parse_test_kind(std::string_view name) {
  if (name == "slt") return TestKind::slt;
  if (name == "typicality") return TestKind::typicality;
  throw InvalidArgument("unknown test '" + std::string(name) + "' (expected slt or typicality)");
}

EvalReport run_trial(const LabeledDataset& data, const BenchmarkConfig& config, std::uint64_t seed) {
  const ZongSplit split = split_zong(data, {derive_seed(seed, 0), config.contamination});
  const ScalerState scaler = fit_scaler(split.train, config.scaler);
  TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, 1);
  const TrainResult trained = train_flow(config.kind, apply_scaler(scaler, split.train), tc);
  const ScoreVector scores = config.test == TestKind::slt
                                 ? slt_score(trained.model, scaler, split.test.features)
                                 : typicality_score(trained.model, scaler, split.train, split.test.features);
  return evaluate(scores.values, split.test.labels, seed);
}

DatasetSummary summarise(const std::string& dataset, const std::vector<EvalReport>& reports) {
  DatasetSummary s;
  s.dataset = dataset;
  s.trials = static_cast<int>(reports.size());
  if (reports.empty()) return s;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    s.auroc_mean += r.auroc / n;
    s.auprc_mean += r.auprc / n;
  }
  for (const auto& r : reports) {
    s.auroc_std += (r.auroc - s.auroc_mean) * (r.auroc - s.auroc_mean) / n;
    s.auprc_std += (r.auprc - s.auprc_mean) * (r.auprc - s.auprc_mean) / n;
  }
  s.auroc_std = std::sqrt(s.auroc_std);
  s.auprc_std = std::sqrt(s.auprc_std);
  return s;
}

BenchmarkResult run_benchmark(const std::vector<LabeledDataset>& datasets, const BenchmarkConfig& config) {
  if (config.trials < 1) throw InvalidArgument("trials must be at least 1");
  config.train.validate();
  const std::size_t trials = static_cast<std::size_t>(config.trials);
  std::vector<TrialResult> cells(datasets.size() * trials);
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const LabeledDataset& data = datasets[i / trials];
    const int trial = static_cast<int>(i % trials);
    const std::uint64_t seed = config.master_seed + static_cast<std::uint64_t>(trial);
    try {
      cells[i] = {data.name, trial, seed, run_trial(data, config, seed)};
    } catch (const Error& e) {
      throw Error(data.name + " (trial " + std::to_string(trial) + "): " + e.what());
    }
  });
  BenchmarkResult out;
  out.trials = std::move(cells);
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    std::vector<EvalReport> reports;
    for (std::size_t t = 0; t < trials; ++t) reports.push_back(out.trials[d * trials + t].report);
    out.summary.push_back(summarise(datasets[d].name, reports));
  }
  return out;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  if (config.datasets.empty()) throw InvalidArgument("no datasets given");
  std::vector<LabeledDataset> data;
  for (const auto& path : config.datasets) {
    try {
      data.push_back(load_csv(path, config.label_column));
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  }
  return run_benchmark(data, config);
}

}  // namespace flowbench
