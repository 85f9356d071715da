// Copyright 2026 The bit-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bit/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace bit {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'B', 'I', 'T', 'K'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<std::size_t>(is.gcount()) == sizeof(T);
}

[[noreturn]] void truncated(const std::string& what) { throw ConfigError("checkpoint truncated while reading " + what); }

}  // namespace

void write_checkpoint(std::ostream& os, const ParamList& params) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  for (const auto& [name, t] : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint64_t>(os, static_cast<std::uint64_t>(e));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.dtype()));
    dispatch(t.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto d = t.data<T>();
      os.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size_bytes()));
    });
  }
  if (!os) throw ConfigError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open " + tmp.string() + " for writing");
    write_checkpoint(os, params);
  }
  std::filesystem::rename(tmp, path);
}

ParamList read_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not a BITK checkpoint (bad magic)");
  std::uint32_t version = 0;
  if (!get(is, version)) truncated("version");
  if (version != kCheckpointVersion) throw ConfigError(str_cat("unsupported checkpoint version ", version));
  ParamList out;
  while (is.peek() != std::char_traits<char>::eof()) {
    std::uint32_t len = 0;
    if (!get(is, len)) truncated("name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len) truncated("name");
    std::uint32_t rank = 0;
    if (!get(is, rank)) truncated("rank of " + name);
    if (rank > 16) throw ConfigError(str_cat("implausible rank ", rank, " for ", name));
    Shape shape(rank);
    for (auto& e : shape) {
      std::uint64_t v = 0;
      if (!get(is, v)) truncated("extents of " + name);
      e = static_cast<std::int64_t>(v);
    }
    std::uint8_t tag = 0;
    if (!get(is, tag)) truncated("dtype of " + name);
    if (tag > 1) throw ConfigError(str_cat("unknown dtype tag ", int(tag), " for ", name));
    const auto dt = static_cast<DType>(tag);
    Tensor t = dispatch(dt, [&](auto dtag) {
      using T = decltype(dtag);
      Tensor x = make_tensor<T>(shape);
      auto d = x.mutable_data<T>();
      is.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size_bytes()));
      if (static_cast<std::size_t>(is.gcount()) != d.size_bytes()) truncated("values of " + name);
      return x;
    });
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

ParamList load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

std::size_t assign_params(const ParamList& dst, const ParamList& src, bool strict) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& s : src) by_name[s.name] = &s.tensor;
  std::size_t copied = 0;
  for (const auto& d : dst) {
    auto it = by_name.find(d.name);
    if (it == by_name.end()) {
      if (strict) throw ConfigError("checkpoint lacks parameter " + d.name);
      continue;
    }
    const Tensor& s = *it->second;
    if (s.shape() != d.tensor.shape()) {
      throw ConfigError(str_cat("parameter ", d.name, " has shape ", shape_str(s.shape()), " in checkpoint but ",
                                shape_str(d.tensor.shape()), " in model"));
    }
    Tensor converted = s.dtype() == d.tensor.dtype() ? s : s.to(d.tensor.dtype());
    Tensor target = d.tensor;
    dispatch(target.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto from = converted.data<T>();
      std::copy(from.begin(), from.end(), target.mutable_data<T>().begin());
    });
    ++copied;
  }
  return copied;
}

}  // namespace bit
