// include/diadfuse/nn/checkpoint.h

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

#ifndef DIADFUSE_NN_CHECKPOINT_H_
#define DIADFUSE_NN_CHECKPOINT_H_

// Checkpoint layout:
//   "DFCK" | u32 version (1) | u32 header length | header JSON |
//   one DFEM f64 tensor per parameter, in header order.
// The header holds {kind, seed, config, tensors: [{name, rows, cols}]}.

#include <filesystem>
#include <string>

#include "diadfuse/nn/tensor.h"

namespace diadfuse::nn {

struct Checkpoint {
  std::string kind;         // "audio_head" | "asd_head"
  std::string config_json;  // architecture description owned by the head
  ModelParams params;
};

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_CHECKPOINT_H_
