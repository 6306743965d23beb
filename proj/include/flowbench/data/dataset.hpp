#pragma once

#include "flowbench/numeric/matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace flowbench {

struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;  // 0 normal, 1 anomaly
  std::string name;
  std::vector<std::string> feature_names;

  Index rows() const { return features.rows(); }
  Index count(int label) const;
};

/// Reads a header-first CSV. Lines starting with '#' are skipped, so files
/// written with a provenance preamble load back directly.
LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column = "label");
LabeledDataset parse_csv(const std::string& text, const std::string& label_column = "label",
                         const std::string& name = "");

/// Header-first CSV of a matrix; `label_column` is appended when labels are given.
std::string to_csv(const Matrix& x, const std::vector<std::string>& names,
                   const std::vector<int>* labels = nullptr, const std::string& label_column = "label");

/// Splits one CSV line on commas, honouring double quotes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace flowbench
