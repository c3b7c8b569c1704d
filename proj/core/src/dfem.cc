// core/src/dfem.cc

// Copyright 2026  diadfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "diadfuse/dfem.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "diadfuse/error.h"

namespace diadfuse::dfem {
namespace {

constexpr char kMagic[4] = {'D', 'F', 'E', 'M'};

template <class U>
void PutLe(std::vector<char> &buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <class U>
U GetLe(const unsigned char *p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void Write(std::ostream &os, const nn::Tensor2 &t, Dtype dtype) {
  std::vector<char> buf;
  const std::size_t width = dtype == Dtype::kF32 ? 4 : 8;
  buf.reserve(20 + static_cast<std::size_t>(t.size()) * width);
  buf.insert(buf.end(), kMagic, kMagic + 4);
  PutLe<std::uint32_t>(buf, kVersion);
  PutLe<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rows()));
  PutLe<std::uint32_t>(buf, static_cast<std::uint32_t>(t.cols()));
  PutLe<std::uint32_t>(buf, static_cast<std::uint32_t>(dtype));
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double v = t.data()[i];
    if (dtype == Dtype::kF32) {
      PutLe<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      PutLe<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
    }
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) Fail(Errc::IoError, "failed writing DFEM tensor");
}

nn::Tensor2 Read(std::istream &is, const std::string &what) {
  std::array<unsigned char, 20> head{};
  is.read(reinterpret_cast<char *>(head.data()), head.size());
  if (is.gcount() != static_cast<std::streamsize>(head.size())) {
    Fail(Errc::SchemaViolation, what + ": truncated DFEM header");
  }
  if (std::memcmp(head.data(), kMagic, 4) != 0) {
    Fail(Errc::SchemaViolation, what + ": bad DFEM magic");
  }
  const auto version = GetLe<std::uint32_t>(head.data() + 4);
  const auto rows = GetLe<std::uint32_t>(head.data() + 8);
  const auto cols = GetLe<std::uint32_t>(head.data() + 12);
  const auto dtype = GetLe<std::uint32_t>(head.data() + 16);
  if (version != kVersion) {
    Fail(Errc::SchemaViolation, what + ": unsupported DFEM version " + std::to_string(version));
  }
  if (dtype > 1) {
    Fail(Errc::SchemaViolation, what + ": unsupported DFEM dtype " + std::to_string(dtype));
  }
  const std::size_t width = dtype == 0 ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> body(count * width);
  is.read(reinterpret_cast<char *>(body.data()), static_cast<std::streamsize>(body.size()));
  if (is.gcount() != static_cast<std::streamsize>(body.size())) {
    Fail(Errc::SchemaViolation, what + ": truncated DFEM payload");
  }
  nn::Tensor2 t(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char *p = body.data() + i * width;
    double v = dtype == 0 ? static_cast<double>(std::bit_cast<float>(GetLe<std::uint32_t>(p)))
                          : std::bit_cast<double>(GetLe<std::uint64_t>(p));
    if (!std::isfinite(v)) Fail(Errc::SchemaViolation, what + ": non-finite value");
    t.data()[i] = v;
  }
  return t;
}

void WriteFile(const std::filesystem::path &path, const nn::Tensor2 &t, Dtype dtype) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(Errc::IoError, "cannot open " + path.string() + " for writing");
  Write(os, t, dtype);
}

nn::Tensor2 ReadFile(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(Errc::MissingEmbedding, path.string());
  return Read(is, path.string());
}

}  // namespace diadfuse::dfem
