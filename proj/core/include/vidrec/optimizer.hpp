#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vidrec/params.hpp"
#include "vidrec/schedule.hpp"

namespace vidrec {

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;  // SGD: buf = momentum * buf + g; p -= lr * buf
};

/// Per-parameter moment buffers, keyed by parameter name.
struct OptimizerState {
  std::size_t step = 0;
  std::unordered_map<std::string, std::vector<double>> first;   // Adam m / SGD momentum buffer
  std::unordered_map<std::string, std::vector<double>> second;  // Adam v
};

/// Applies one update to every parameter of `store` whose group is in
/// `trainable_groups` and that has an entry in `grads`; all other parameters
/// are left untouched. Adam uses bias-corrected moments.
///
/// Throws ShapeError if a gradient's shape differs from its parameter, and
/// NumericalError if a gradient is non-finite (nothing is updated then).
void optimizer_step(const OptimizerConfig& config, ParameterStore& store,
                    const std::unordered_map<std::string, Tensor>& grads, double lr,
                    const std::set<std::string>& trainable_groups, OptimizerState& state);

}  // namespace vidrec
