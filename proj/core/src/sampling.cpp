#include "vidrec/sampling.hpp"

#include <algorithm>

#include "vidrec/errors.hpp"

namespace vidrec {

std::pair<std::size_t, std::size_t> segment_range(std::size_t n, std::size_t T, std::size_t k) {
  const std::size_t lo = k * n / T;
  const std::size_t hi_exclusive = ((k + 1) * n + T - 1) / T;  // ceil
  return {lo, std::max(lo, hi_exclusive - 1)};
}

std::vector<std::size_t> sample_frames(std::size_t n, std::size_t T, SampleMode mode,
                                       std::mt19937_64& rng) {
  if (T == 0) throw ValidationError("sample_frames: T must be positive");
  if (n == 0) throw ValidationError("sample_frames: no frames available");
  std::vector<std::size_t> out(T);
  for (std::size_t k = 0; k < T; ++k) {
    if (mode == SampleMode::eval) {
      out[k] = (2 * k + 1) * n / (2 * T);
    } else {
      const auto [lo, hi] = segment_range(n, T, k);
      out[k] = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
  }
  return out;
}

std::vector<std::size_t> sample_frames(std::size_t n, std::size_t T, SampleMode mode,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_frames(n, T, mode, rng);
}

}  // namespace vidrec
