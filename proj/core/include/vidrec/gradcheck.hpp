#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vidrec/tensor.hpp"

namespace vidrec {

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct GradEntry {
  std::string name;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradReport {
  double tolerance = 0.0;
  std::vector<GradEntry> entries;

  bool passed() const;
  double max_rel_error() const;
};

/// Scalar-valued function of the parameters, in the order they were passed.
/// Must be deterministic (no dropout, fixed RNG streams).
using ScalarFn = std::function<Tensor(std::span<const Tensor>)>;

/// Compares reverse-mode gradients of `fn` against central differences
/// (f(p+eps) - f(p-eps)) / (2 eps), coordinate by coordinate.
///
/// The relative error of a coordinate is |analytic - numeric| divided by the
/// largest of |analytic|, |numeric| and 1e-3 times the largest analytic
/// magnitude in that parameter (so coordinates with negligible gradient are
/// judged on the parameter's own scale). An entry passes iff its
/// max_rel_error <= tol.
///
/// Throws NumericalError if two baseline evaluations of `fn` disagree.
GradReport grad_check(const ScalarFn& fn, const std::vector<NamedTensor>& params,
                      double eps = 1e-5, double tol = 1e-4);

}  // namespace vidrec
