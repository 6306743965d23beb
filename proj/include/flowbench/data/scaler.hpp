#pragma once

#include "flowbench/numeric/matrix.hpp"

#include <string_view>

namespace flowbench {

enum class ScalerKind { robust, standard, minmax, none };

std::string_view to_string(ScalerKind kind);
ScalerKind parse_scaler_kind(std::string_view name);

/// Per-feature affine transform x' = (x - center) / scale.
struct ScalerState {
  ScalerKind kind = ScalerKind::none;
  Vector center;
  Vector scale;
};

/// Quantile with linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// robust: median / IQR; standard: mean / population std; minmax: min /
/// range. Zero spread is replaced by 1.
ScalerState fit_scaler(const Matrix& x, ScalerKind kind);
Matrix apply_scaler(const ScalerState& s, const Matrix& x);
Matrix invert_scaler(const ScalerState& s, const Matrix& x);

}  // namespace flowbench
