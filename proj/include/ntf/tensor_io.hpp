#pragma once

// Tensor exchange format.
//
// Binary layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "NTF3"
//   4       4     uint32 format version (1)
//   8       4     uint32 value semantics (0 unspecified, 1 trade counts, 2 million EUR)
//   12      4     uint32 reserved, must be 0
//   16      8     uint64 N (banks)
//   24      8     uint64 T (intervals per day)
//   32      8     uint64 D (days)
//   40      8*NTD IEEE-754 binary64 values, index ((i*T)+j)*D+k
//
// The JSON debug variant carries the same information:
//   {"format":"ntf3","version":1,"semantics":"counts","dims":[N,T,D],"values":[...]}

#include "ntf/tensor.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace ntf {

enum class ValueSemantics : std::uint32_t { unspecified = 0, trade_counts = 1, million_eur = 2 };

inline std::string_view semantics_name(ValueSemantics s) {
  switch (s) {
    case ValueSemantics::trade_counts: return "counts";
    case ValueSemantics::million_eur: return "million_eur";
    default: return "unspecified";
  }
}

inline ValueSemantics semantics_from_name(std::string_view s) {
  if (s == "counts") return ValueSemantics::trade_counts;
  if (s == "million_eur") return ValueSemantics::million_eur;
  if (s == "unspecified") return ValueSemantics::unspecified;
  throw std::invalid_argument("unknown tensor value semantics '" + std::string(s) + "'");
}

struct TensorFile {
  DenseTensor3 tensor;
  ValueSemantics semantics = ValueSemantics::unspecified;
};

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 4> kTensorMagic{'N', 'T', 'F', '3'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw format_error("tensor file truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * b);
  }
  return v;
}

}  // namespace detail

inline void write_tensor_binary(std::ostream& os, const DenseTensor3& x,
                                ValueSemantics semantics = ValueSemantics::unspecified) {
  os.write(kTensorMagic.data(), kTensorMagic.size());
  detail::put_u32(os, kTensorFormatVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(semantics));
  detail::put_u32(os, 0);
  detail::put_u64(os, x.dims().n);
  detail::put_u64(os, x.dims().t);
  detail::put_u64(os, x.dims().d);
  for (double v : x.values()) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline TensorFile read_tensor_binary(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kTensorMagic) throw format_error("not an NTF3 tensor file (bad magic)");
  const auto version = static_cast<std::uint32_t>(detail::get_le(is, 4));
  if (version != kTensorFormatVersion) {
    throw format_error("unsupported tensor format version " + std::to_string(version));
  }
  const auto sem = static_cast<std::uint32_t>(detail::get_le(is, 4));
  if (sem > 2) throw format_error("unknown value semantics tag " + std::to_string(sem));
  if (detail::get_le(is, 4) != 0) throw format_error("reserved header field must be zero");
  Dims3 dims;
  dims.n = detail::get_le(is, 8);
  dims.t = detail::get_le(is, 8);
  dims.d = detail::get_le(is, 8);
  std::vector<double> values(dims.size());
  for (auto& v : values) v = std::bit_cast<double>(detail::get_le(is, 8));
  if (is.peek() != std::char_traits<char>::eof()) throw format_error("trailing bytes after tensor payload");
  try {
    return {DenseTensor3(dims, std::move(values)), static_cast<ValueSemantics>(sem)};
  } catch (const std::invalid_argument& e) {
    throw format_error(e.what());
  }
}

inline nlohmann::json tensor_to_json(const DenseTensor3& x,
                                     ValueSemantics semantics = ValueSemantics::unspecified) {
  return {{"format", "ntf3"},
          {"version", kTensorFormatVersion},
          {"semantics", semantics_name(semantics)},
          {"dims", {x.dims().n, x.dims().t, x.dims().d}},
          {"values", x.values()}};
}

inline TensorFile tensor_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "ntf3") throw format_error("JSON is not an ntf3 tensor");
    if (j.at("version").get<std::uint32_t>() != kTensorFormatVersion) {
      throw format_error("unsupported tensor JSON version");
    }
    const auto dims = j.at("dims").get<std::array<std::size_t, 3>>();
    return {DenseTensor3({dims[0], dims[1], dims[2]}, j.at("values").get<std::vector<double>>()),
            semantics_from_name(j.at("semantics").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed tensor JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw format_error(e.what());
  }
}

inline void save_tensor(const std::string& path, const DenseTensor3& x, ValueSemantics semantics) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  write_tensor_binary(os, x, semantics);
  if (!os) throw std::ios_base::failure("write to '" + path + "' failed");
}

/// Loads either layout; files starting with '{' are parsed as the JSON variant.
inline TensorFile load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot open tensor file '" + path + "'");
  if (is.peek() == '{') {
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw format_error(std::string("malformed tensor JSON: ") + e.what());
    }
    return tensor_from_json(j);
  }
  return read_tensor_binary(is);
}

}  // namespace ntf
