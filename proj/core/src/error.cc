// core/src/error.cc

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

#include "diadfuse/error.h"

namespace diadfuse {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::MissingEmbedding: return "MissingEmbedding";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::TimestampOrder: return "TimestampOrder";
    case Errc::DurationOutOfRange: return "DurationOutOfRange";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::AlignmentError: return "AlignmentError";
    case Errc::NotADistribution: return "NotADistribution";
    case Errc::EmptyTrack: return "EmptyTrack";
    case Errc::UnnormalizedSpeakerPair: return "UnnormalizedSpeakerPair";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TooFewSessions: return "TooFewSessions";
    case Errc::UnknownUtterance: return "UnknownUtterance";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ModeDataMissing: return "ModeDataMissing";
    case Errc::ModeMismatch: return "ModeMismatch";
    case Errc::UsageError: return "UsageError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string &detail)
    : std::runtime_error(std::string(ErrcName(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void Fail(Errc code, const std::string &detail) { throw Error(code, detail); }

}  // namespace diadfuse
