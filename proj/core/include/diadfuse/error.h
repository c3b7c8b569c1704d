// include/diadfuse/error.h

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

#ifndef DIADFUSE_ERROR_H_
#define DIADFUSE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace diadfuse {

enum class Errc {
  MissingEmbedding,
  SchemaViolation,
  TimestampOrder,
  DurationOutOfRange,
  ShapeMismatch,
  EmptySplit,
  AlignmentError,
  NotADistribution,
  EmptyTrack,
  UnnormalizedSpeakerPair,
  LengthMismatch,
  EmptyInput,
  TooFewSessions,
  UnknownUtterance,
  InvalidConfig,
  ModeDataMissing,
  ModeMismatch,
  UsageError,
  IoError,
};

std::string_view ErrcName(Errc code);

// All library failures are reported as diadfuse::Error; code() carries the
// machine-readable kind that the CLI prints.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &detail);
  Errc code() const noexcept { return code_; }
  const std::string &detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] void Fail(Errc code, const std::string &detail);

}  // namespace diadfuse

#endif  // DIADFUSE_ERROR_H_
