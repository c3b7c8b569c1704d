// core/src/nn/checkpoint.cc

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

#include "diadfuse/nn/checkpoint.h"

#include <array>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "diadfuse/dfem.h"
#include "diadfuse/error.h"

namespace diadfuse::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'F', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void PutU32(std::ostream &os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 4);
}

std::uint32_t GetU32(std::istream &is, const std::string &what) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char *>(b.data()), 4);
  if (is.gcount() != 4) Fail(Errc::SchemaViolation, what + ": truncated checkpoint");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ckpt) {
  json header;
  header["kind"] = ckpt.kind;
  header["seed"] = ckpt.params.seed();
  header["config"] = json::parse(ckpt.config_json);
  json tensors = json::array();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    tensors.push_back({{"name", ckpt.params.name(i)},
                       {"rows", ckpt.params.at(i).rows()},
                       {"cols", ckpt.params.at(i).cols()}});
  }
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(Errc::IoError, "cannot write checkpoint " + path.string());
  os.write(kMagic, 4);
  PutU32(os, kCheckpointVersion);
  PutU32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    dfem::Write(os, ckpt.params.at(i), dfem::Dtype::kF64);
  }
  if (!os) Fail(Errc::IoError, "failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(Errc::IoError, "cannot open checkpoint " + path.string());
  const std::string what = path.string();
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    Fail(Errc::SchemaViolation, what + ": not a checkpoint");
  }
  if (GetU32(is, what) != kCheckpointVersion) {
    Fail(Errc::SchemaViolation, what + ": unsupported checkpoint version");
  }
  const std::uint32_t len = GetU32(is, what);
  std::string text(len, '\0');
  is.read(text.data(), len);
  if (is.gcount() != static_cast<std::streamsize>(len)) {
    Fail(Errc::SchemaViolation, what + ": truncated header");
  }
  json header;
  try {
    header = json::parse(text);
    Checkpoint ckpt;
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.config_json = header.at("config").dump();
    ckpt.params = ModelParams(header.at("seed").get<std::uint64_t>());
    for (const auto &t : header.at("tensors")) {
      Tensor2 value = dfem::Read(is, what);
      if (value.rows() != t.at("rows").get<Eigen::Index>() ||
          value.cols() != t.at("cols").get<Eigen::Index>()) {
        Fail(Errc::SchemaViolation, what + ": tensor shape differs from header");
      }
      ckpt.params.Add(t.at("name").get<std::string>(), std::move(value));
    }
    return ckpt;
  } catch (const json::exception &e) {
    Fail(Errc::SchemaViolation, what + ": " + e.what());
  }
}

}  // namespace diadfuse::nn
