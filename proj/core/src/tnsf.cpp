#include "vidrec/tnsf.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vidrec/errors.hpp"

namespace vidrec::tnsf {

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'N', 'S', 'F'};
constexpr std::size_t kFixedHeader = 8;

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode(const Tensor& t, DType dtype) {
  if (!t.defined()) throw ShapeError("tnsf::encode: undefined tensor");
  if (t.rank() > 0xFFFF) throw ShapeError("tnsf::encode: rank exceeds 65535");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.rank()));
  for (std::size_t e : t.shape()) put_le<std::uint64_t>(out, e);
  out.reserve(out.size() + t.size() * (dtype == DType::f64 ? 8 : 4));
  for (double v : t.data()) {
    if (dtype == DType::f64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Tensor decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader) {
    throw FormatError("TNSF: truncated header: expected at least 8 bytes, got " +
                      std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("TNSF: bad magic");
  if (bytes[4] != kVersion) {
    throw FormatError("TNSF: unsupported version " + std::to_string(bytes[4]));
  }
  const std::uint8_t dt = bytes[5];
  if (dt > 1) throw FormatError("TNSF: unknown dtype code " + std::to_string(dt));
  const std::size_t width = dt == 1 ? 8 : 4;
  const std::size_t rank = get_le<std::uint16_t>(bytes.data() + 6);
  const std::size_t header = kFixedHeader + 8 * rank;
  if (bytes.size() < header) {
    throw FormatError("TNSF: truncated header: expected " + std::to_string(header) +
                      " bytes for rank " + std::to_string(rank) + ", got " +
                      std::to_string(bytes.size()));
  }
  Shape shape(rank);
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = static_cast<std::size_t>(get_le<std::uint64_t>(bytes.data() + kFixedHeader + 8 * i));
    if (shape[i] == 0) throw FormatError("TNSF: zero extent on axis " + std::to_string(i));
    count *= shape[i];
  }
  const std::size_t expected = count * width;
  const std::size_t actual = bytes.size() - header;
  if (actual != expected) {
    throw FormatError("TNSF: payload length mismatch: expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual));
  }
  std::vector<double> data(count);
  const std::uint8_t* p = bytes.data() + header;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    data[i] = dt == 1 ? std::bit_cast<double>(get_le<std::uint64_t>(p))
                      : static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const NumericalError& e) {
    throw FormatError(std::string("TNSF: ") + e.what());
  }
}

void write(std::ostream& os, const Tensor& t, DType dtype) {
  const auto bytes = encode(t, dtype);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("TNSF: write failed");
}

Tensor read(std::istream& is) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

void save(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("TNSF: cannot open " + path.string() + " for writing");
  write(os, t, dtype);
}

Tensor load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("TNSF: cannot open " + path.string());
  try {
    return read(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace vidrec::tnsf
