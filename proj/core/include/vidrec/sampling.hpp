#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace vidrec {

enum class SampleMode { train, eval };

/// Splits [0, n) into T equal real-valued segments [k·n/T, (k+1)·n/T).
/// Eval picks floor((2k+1)·n / (2T)), the segment centre; train picks an index
/// uniformly from the integers the segment covers (the first covered index
/// when the segment is narrower than one frame). Result is nondecreasing.
///
/// Throws ValidationError when T = 0 or n = 0.
std::vector<std::size_t> sample_frames(std::size_t n_available, std::size_t T, SampleMode mode,
                                       std::mt19937_64& rng);
std::vector<std::size_t> sample_frames(std::size_t n_available, std::size_t T, SampleMode mode,
                                       std::uint64_t seed);

/// Inclusive index range [first, last] that train mode draws from for segment k.
std::pair<std::size_t, std::size_t> segment_range(std::size_t n_available, std::size_t T,
                                                  std::size_t k);

}  // namespace vidrec
