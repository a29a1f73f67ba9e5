#pragma once

#include <random>

#include "vidrec/ops.hpp"

namespace vidrec {

/// Train/eval switch for one forward pass. Dropout is active only when
/// `training` is set and an RNG is supplied.
struct ForwardContext {
  bool training = false;
  double dropout_p = 0.0;
  std::mt19937_64* rng = nullptr;

  Tensor drop(const Tensor& x) const {
    return training ? dropout(x, dropout_p, rng) : x;
  }
};

}  // namespace vidrec
