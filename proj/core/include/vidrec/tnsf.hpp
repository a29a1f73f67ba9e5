#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "vidrec/tensor.hpp"

// "TNSF" binary tensor container:
//   bytes 0-3  magic "TNSF"
//   byte  4    version (1)
//   byte  5    dtype (0 = f32, 1 = f64)
//   bytes 6-7  rank, u16 little-endian
//   rank x u64 little-endian extents
//   row-major payload, little-endian
namespace vidrec::tnsf {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr std::uint8_t kVersion = 1;

std::vector<std::uint8_t> encode(const Tensor& t, DType dtype = DType::f64);
/// Throws FormatError on bad magic, version, dtype, truncated header, or a
/// payload whose length differs from what the header implies.
Tensor decode(std::span<const std::uint8_t> bytes);

void write(std::ostream& os, const Tensor& t, DType dtype = DType::f64);
Tensor read(std::istream& is);

void save(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::f64);
Tensor load(const std::filesystem::path& path);

}  // namespace vidrec::tnsf
