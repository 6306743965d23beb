#pragma once

#include "flowbench/data/dataset.hpp"

#include <cstdint>
#include <vector>

namespace flowbench {

struct SplitSpec {
  std::uint64_t seed = 0;
  double contamination_ratio = 0.0;
};

struct ZongSplit {
  Matrix train;  // unlabeled; contaminants included
  LabeledDataset test;
  std::vector<Index> train_rows;  // source row of each train row
  std::vector<Index> test_rows;   // source row of each test row
  Index contaminants = 0;
};

/// Half of the normals (floor) train the model; the rest plus every anomaly
/// form the test set. With contamination, round(ratio * train normals)
/// randomly chosen anomalies move from test into train.
ZongSplit split_zong(const LabeledDataset& data, const SplitSpec& spec);

}  // namespace flowbench
