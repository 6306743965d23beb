#pragma once

#include "flowbench/numeric/matrix.hpp"

#include <functional>

namespace flowbench {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every
/// coordinate. Serves as the independent oracle for analytic gradients.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||, floor); 0 when both are zero.
double relative_error(const Vector& a, const Vector& b, double floor = 1e-12);

}  // namespace flowbench
