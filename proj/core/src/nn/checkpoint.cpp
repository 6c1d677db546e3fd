// SPDX-License-Identifier: Apache-2.0
#include "dlo/nn/checkpoint.hpp"

#include "dlo/error.hpp"
#include "dlo/util.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dlo::nn {
namespace {

constexpr std::array<char, 8> kMagic = {'D', 'L', 'O', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  std::make_unsigned_t<T> v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

void put_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void put_str(std::ostream& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  const auto n = get_le<std::uint32_t>(in);
  if (n > (1u << 24)) throw IoError("implausible string length in checkpoint");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IoError("truncated checkpoint");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& store) {
  out.write(kMagic.data(), kMagic.size());
  put_le(out, kCheckpointVersion);
  put_le(out, store.config_hash);
  put_str(out, store.kind);
  put_le(out, static_cast<std::uint32_t>(store.attributes.size()));
  for (const auto& [k, v] : store.attributes) {
    put_str(out, k);
    put_str(out, v);
  }
  put_le(out, static_cast<std::uint32_t>(store.arrays.size()));
  for (const auto& [k, values] : store.arrays) {
    put_str(out, k);
    put_le(out, static_cast<std::uint64_t>(values.size()));
    for (double v : values) put_f64(out, v);
  }
  put_le(out, static_cast<std::uint32_t>(store.entries().size()));
  for (const auto& [name, t] : store.entries()) {
    put_str(out, name);
    put_le(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le(out, static_cast<std::uint64_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  if (!out) throw IoError("checkpoint write failed");
}

ParameterStore read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not a checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  ParameterStore store;
  store.config_hash = get_le<std::uint64_t>(in);
  store.kind = get_str(in);
  const auto n_attr = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_attr; ++i) {
    auto k = get_str(in);
    store.attributes[k] = get_str(in);
  }
  const auto n_arr = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_arr; ++i) {
    auto k = get_str(in);
    const auto n = get_le<std::uint64_t>(in);
    std::vector<double> values(n);
    for (auto& v : values) v = get_f64(in);
    store.arrays[k] = std::move(values);
  }
  const auto n_entry = get_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_entry; ++i) {
    auto name = get_str(in);
    const auto rank = get_le<std::uint32_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(in));
    std::vector<double> data(shape_product(shape));
    for (auto& v : data) v = get_f64(in);
    store.set(name, Tensor(std::move(shape), std::move(data)));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  std::ostringstream buf(std::ios::binary);
  write_checkpoint(buf, store);
  write_file_atomic(path, buf.str());
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(read_file(path), std::ios::binary);
  try {
    return read_checkpoint(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace dlo::nn
