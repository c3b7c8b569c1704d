// include/diadfuse/pipeline.h

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

#ifndef DIADFUSE_PIPELINE_H_
#define DIADFUSE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diadfuse/asd-head.h"
#include "diadfuse/audio-head.h"
#include "diadfuse/corpus.h"
#include "diadfuse/eval.h"
#include "diadfuse/fusion.h"

namespace diadfuse::pipeline {

// Experiment configuration (JSON):
//   {corpus, seed, threads,
//    audio: {lr, batch_size, max_epochs, patience, conv_hidden, mlp_hidden},
//    asd: {lr, batch_size, max_epochs, patience, hidden},
//    fusion: {two_face_source: "combined" | "individual"},
//    eval: {folds}}
struct RunConfig {
  std::string corpus;  // manifest path
  std::uint64_t seed = 0;
  int threads = 1;
  audio::AudioTrainConfig audio;
  asd::AsdTrainConfig asd;
  fusion::TwoFaceSource two_face_source = fusion::TwoFaceSource::kCombined;
  int folds = 5;
};

RunConfig RunConfigFromJson(const std::string &text);
RunConfig LoadRunConfig(const std::filesystem::path &path);
std::string ToJson(const RunConfig &c);

// Per-head training settings with seeds derived from `seed` and `stage`.
audio::AudioTrainConfig AudioConfigFor(const RunConfig &c, const std::string &stage);
asd::AsdTrainConfig AsdConfigFor(const RunConfig &c, asd::Mode mode, const std::string &stage);

struct Models {
  std::optional<audio::AudioHead> audio;
  std::optional<asd::AsdHead> individual;
  std::optional<asd::AsdHead> combined;
};

// Scores every utterance of the given sessions. OneFace utterances need the
// individual head; TwoFaces utterances need the head selected by `source`.
// Missing heads raise ModeDataMissing only when an utterance needs them.
std::vector<fusion::FusionRecord> ClassifySessions(const corpus::Corpus &corpus,
                                                   const Models &models,
                                                   const std::vector<std::string> &session_ids,
                                                   fusion::TwoFaceSource source, int threads);

struct SystemSummary {
  eval::MetricReport pooled;
  std::vector<double> fold_f1;  // NaN when a fold scores nothing
  double fold_mean = 0.0;
  double fold_std = 0.0;
};

struct CrossvalResult {
  std::vector<fusion::FusionRecord> records;  // pooled test predictions
  std::map<eval::System, SystemSummary> systems;
  std::string report_json;
  std::string report_text;

  double F1(eval::System s) const { return systems.at(s).pooled.f1_macro; }
  // Fused minus audio F1 within one visual condition.
  double Gain(corpus::ConditionTag tag) const;
};

// Session-level k-fold cross-validation on a preprocessed corpus. When
// out_dir is set it receives fold<k>/{audio,asd_individual,asd_combined}.ckpt,
// fold<k>/train_log.json, records.jsonl, report.json and report.txt.
CrossvalResult RunCrossval(const corpus::Corpus &corpus, const RunConfig &config,
                           const std::optional<std::filesystem::path> &out_dir = std::nullopt);

// Report over existing records (the `evaluate` step).
std::string ReportJson(const std::vector<fusion::FusionRecord> &records,
                       const corpus::Corpus &corpus);
std::string ReportText(const std::vector<fusion::FusionRecord> &records,
                       const corpus::Corpus &corpus);

// Writes via a temporary file and rename, so readers never see a partial
// file under the final name.
void WriteText(const std::filesystem::path &path, const std::string &text);

}  // namespace diadfuse::pipeline

#endif  // DIADFUSE_PIPELINE_H_
