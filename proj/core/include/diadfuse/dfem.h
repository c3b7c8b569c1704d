// include/diadfuse/dfem.h

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

#ifndef DIADFUSE_DFEM_H_
#define DIADFUSE_DFEM_H_

// DFEM is the on-disk tensor format shared by embeddings and checkpoints.
//
//   bytes 0..3    magic "DFEM"
//   u32           version (1)
//   u32           T  (rows)
//   u32           D  (cols)
//   u32           dtype: 0 = f32, 1 = f64
//   T*D values    row-major, little-endian
//
// Embeddings are written as f32. Checkpoints use f64 so that a reloaded
// model reproduces the in-memory one bit for bit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "diadfuse/nn/tensor.h"

namespace diadfuse::dfem {

enum class Dtype : std::uint32_t { kF32 = 0, kF64 = 1 };

inline constexpr std::uint32_t kVersion = 1;

void Write(std::ostream &os, const nn::Tensor2 &t, Dtype dtype);
nn::Tensor2 Read(std::istream &is, const std::string &what = "stream");

void WriteFile(const std::filesystem::path &path, const nn::Tensor2 &t, Dtype dtype);
nn::Tensor2 ReadFile(const std::filesystem::path &path);

}  // namespace diadfuse::dfem

#endif  // DIADFUSE_DFEM_H_
