#include "flowbench/data/scaler.hpp"

#include "flowbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowbench {

std::string_view to_string(ScalerKind kind) {
  switch (kind) {
    case ScalerKind::robust: return "robust";
    case ScalerKind::standard: return "standard";
    case ScalerKind::minmax: return "minmax";
    case ScalerKind::none: return "none";
  }
  return "unknown";
}

ScalerKind parse_scaler_kind(std::string_view name) {
  if (name == "robust") return ScalerKind::robust;
  if (name == "standard") return ScalerKind::standard;
  if (name == "minmax") return ScalerKind::minmax;
  if (name == "none") return ScalerKind::none;
  throw InvalidArgument("unknown scaler '" + std::string(name) + "'");
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw EmptyDataset("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ScalerState fit_scaler(const Matrix& x, ScalerKind kind) {
  if (x.rows() < 1) throw EmptyDataset("cannot fit a scaler on zero rows");
  const Index d = x.cols();
  ScalerState s{kind, Vector::Zero(d), Vector::Ones(d)};
  for (Index j = 0; j < d; ++j) {
    std::vector<double> col(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, j);
    double center = 0.0, scale = 1.0;
    switch (kind) {
      case ScalerKind::robust:
        center = quantile(col, 0.5);
        scale = quantile(col, 0.75) - quantile(col, 0.25);
        break;
      case ScalerKind::standard: {
        center = x.col(j).mean();
        scale = std::sqrt((x.col(j).array() - center).square().mean());
        break;
      }
      case ScalerKind::minmax:
        center = x.col(j).minCoeff();
        scale = x.col(j).maxCoeff() - center;
        break;
      case ScalerKind::none:
        break;
    }
    s.center(j) = center;
    s.scale(j) = scale > 0.0 ? scale : 1.0;
  }
  return s;
}

Matrix apply_scaler(const ScalerState& s, const Matrix& x) {
  if (x.cols() != s.center.size()) throw DimMismatch("scaler fitted on " + std::to_string(s.center.size()) +
                                                     " features, input has " + std::to_string(x.cols()));
  if (s.kind == ScalerKind::none) return x;
  return ((x.rowwise() - s.center.transpose()).array().rowwise() / s.scale.transpose().array()).matrix();
}

Matrix invert_scaler(const ScalerState& s, const Matrix& x) {
  if (x.cols() != s.center.size()) throw DimMismatch("scaler feature count does not match input");
  if (s.kind == ScalerKind::none) return x;
  return ((x.array().rowwise() * s.scale.transpose().array()).matrix().rowwise() + s.center.transpose());
}

}  // namespace flowbench
