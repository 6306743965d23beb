#include "flowbench/data/split.hpp"

#include "flowbench/error.hpp"
#include "flowbench/numeric/rng.hpp"

#include <algorithm>
#include <cmath>

namespace flowbench {

ZongSplit split_zong(const LabeledDataset& data, const SplitSpec& spec) {
  if (static_cast<Index>(data.labels.size()) != data.rows()) throw DimMismatch("labels do not match rows");
  if (!(spec.contamination_ratio >= 0.0 && spec.contamination_ratio < 1.0))
    throw InvalidArgument("contamination ratio must lie in [0, 1)");
  std::vector<Index> normals, anomalies;
  for (Index i = 0; i < data.rows(); ++i)
    (data.labels[static_cast<std::size_t>(i)] == 0 ? normals : anomalies).push_back(i);
  if (normals.size() < 2) throw TooFewNormals("need at least 2 normal rows, have " + std::to_string(normals.size()));

  Rng rng(spec.seed);
  auto shuffle = [&](std::vector<Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };
  shuffle(normals);
  shuffle(anomalies);

  const std::size_t n_train_normal = normals.size() / 2;
  const auto n_cont = static_cast<std::size_t>(std::llround(spec.contamination_ratio * static_cast<double>(n_train_normal)));
  if (n_cont > anomalies.size())
    throw InvalidArgument("contamination needs " + std::to_string(n_cont) + " anomalies, dataset has " +
                          std::to_string(anomalies.size()));

  ZongSplit out;
  out.contaminants = static_cast<Index>(n_cont);
  out.train_rows.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_train_normal));
  out.train_rows.insert(out.train_rows.end(), anomalies.begin(), anomalies.begin() + static_cast<std::ptrdiff_t>(n_cont));
  out.test_rows.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train_normal), normals.end());
  out.test_rows.insert(out.test_rows.end(), anomalies.begin() + static_cast<std::ptrdiff_t>(n_cont), anomalies.end());
  // Test rows keep source order so reports read naturally.
  std::sort(out.test_rows.begin(), out.test_rows.end());

  out.train.resize(static_cast<Index>(out.train_rows.size()), data.features.cols());
  for (std::size_t i = 0; i < out.train_rows.size(); ++i)
    out.train.row(static_cast<Index>(i)) = data.features.row(out.train_rows[i]);
  out.test.name = data.name;
  out.test.feature_names = data.feature_names;
  out.test.features.resize(static_cast<Index>(out.test_rows.size()), data.features.cols());
  for (std::size_t i = 0; i < out.test_rows.size(); ++i) {
    out.test.features.row(static_cast<Index>(i)) = data.features.row(out.test_rows[i]);
    out.test.labels.push_back(data.labels[static_cast<std::size_t>(out.test_rows[i])]);
  }
  return out;
}

}  // namespace flowbench
