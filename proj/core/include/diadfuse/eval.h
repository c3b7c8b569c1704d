// include/diadfuse/eval.h

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

#ifndef DIADFUSE_EVAL_H_
#define DIADFUSE_EVAL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diadfuse/corpus.h"
#include "diadfuse/fusion.h"

namespace diadfuse::eval {

// Binary labels are class indices 0 / 1. For speaker labels, 0 is Child.
inline int ClassIndex(corpus::Speaker s) { return s == corpus::Speaker::kChild ? 0 : 1; }

struct F1Scores {
  double macro = 0.0;
  std::array<double, 2> per_class{};
  // A class with 2TP + FP + FN == 0 (absent from preds and truth) scores 0
  // and is flagged here.
  std::array<bool, 2> undefined{};
  std::array<std::size_t, 2> support{};  // truth counts
};

class Confusion {
 public:
  void Add(int truth, int pred) { ++m_[truth][pred]; }
  void Merge(const Confusion &other);
  std::size_t Total() const;
  std::size_t Count(int truth, int pred) const { return m_[truth][pred]; }
  // Throws EmptyInput on an empty matrix.
  F1Scores Scores() const;

 private:
  std::array<std::array<std::size_t, 2>, 2> m_{};
};

F1Scores BinaryF1(std::span<const int> preds, std::span<const int> truth);
double F1Macro(std::span<const int> preds, std::span<const int> truth);
double F1Macro(std::span<const corpus::Speaker> preds, std::span<const corpus::Speaker> truth);

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Shuffles sessions by seed into k contiguous folds (sizes differ by at most
// one, larger folds first). Fold i tests on fold i, validates on fold
// (i+1) mod k and trains on the rest.
std::vector<FoldSplit> SessionCvSplit(const std::vector<std::string> &session_ids, int k,
                                      std::uint64_t seed);

enum class System { kAudio, kAsd, kFused };
std::string_view ToString(System s);

enum class TypeGroup { kSpeech, kNonverbal, kOtherTypes };
std::string_view ToString(TypeGroup g);
TypeGroup GroupOf(corpus::UttType t);

struct Stratum {
  Confusion confusion;
  std::size_t Support() const { return confusion.Total(); }
  std::optional<double> F1() const;
};

struct MetricReport {
  System system = System::kFused;
  // Over all headline conditions (everything except Others).
  double f1_macro = 0.0;
  std::array<double, 2> per_class_f1{};
  std::array<std::size_t, 2> support{};
  std::size_t scored = 0;
  std::size_t excluded = 0;
  std::map<corpus::ConditionTag, Stratum> by_condition;
  std::map<corpus::ConditionTag, std::map<corpus::LengthBin, Stratum>> by_length;
  std::map<corpus::ConditionTag, std::map<TypeGroup, Stratum>> by_type;
  std::map<corpus::ConditionTag,
           std::map<corpus::LengthBin, std::map<TypeGroup, Stratum>>>
      cells;
};

// The prediction `system` would make for a record, if it makes one: audio
// is argmax(P_a), ASD is argmax(P_asd) (one- and two-face records only),
// fused is y_hat.
std::optional<corpus::Speaker> Prediction(const fusion::FusionRecord &r, System system);

// Throws UnknownUtterance for records whose utterance is not in the corpus
// and EmptyInput when nothing is scored.
MetricReport StratifiedReport(const std::vector<fusion::FusionRecord> &records,
                              const corpus::Corpus &corpus, System system = System::kFused);

std::string ReportToJson(const MetricReport &report, int indent = 1);

// Fixed-width tables: overall/visual condition, utterance length and
// utterance type, one row per system.
std::string FormatTables(const std::vector<MetricReport> &reports);

}  // namespace diadfuse::eval

#endif  // DIADFUSE_EVAL_H_
