#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace flowbench {

using Index = Eigen::Index;

/// Dense row-major feature matrix: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace flowbench
