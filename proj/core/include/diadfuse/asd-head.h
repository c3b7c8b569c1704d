// include/diadfuse/asd-head.h

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

#ifndef DIADFUSE_ASD_HEAD_H_
#define DIADFUSE_ASD_HEAD_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diadfuse/corpus.h"
#include "diadfuse/eval.h"
#include "diadfuse/nn/checkpoint.h"
#include "diadfuse/nn/tape.h"
#include "diadfuse/training.h"

namespace diadfuse::asd {

enum class Mode { kIndividual, kCombined };
std::string_view ToString(Mode m);
Mode ParseMode(std::string_view s);  // InvalidConfig

// One or two visual tracks [T_v x Dv] and the audio [T_a x Da] of an
// utterance, with T_a = rho * T_v.
struct AsdInput {
  std::vector<nn::Tensor2> visual;
  nn::Tensor2 audio;
  Mode mode = Mode::kIndividual;
};

// Checks the shape contract for a given rho; AlignmentError / ShapeMismatch.
void CheckInput(const AsdInput &in, int rho);

// Cuts the utterance window out of each track's visual embedding and pairs it
// with layer 0 of the utterance audio. The audio is cropped to rho * T_v
// rows with T_v = floor(T_a / rho).
AsdInput MakeInput(const corpus::Corpus &corpus, const corpus::Utterance &utt,
                   const std::vector<const corpus::FaceTrack *> &tracks, Mode mode);

struct AsdHeadConfig {
  Mode mode = Mode::kIndividual;
  int visual_dim = 0;  // per track
  int audio_dim = 0;
  int hidden = 128;
  int rho = 1;
  int kernel_a = 3;
  int kernel_b = 5;

  int outputs() const { return mode == Mode::kIndividual ? 1 : 2; }
};

std::string ToJson(const AsdHeadConfig &c);
AsdHeadConfig AsdHeadConfigFromJson(const std::string &text);

struct IndividualOutput {
  double p_spk = 0.5;
  std::optional<double> p_aux;
};

struct CombinedOutput {
  double p_spk1 = 0.5;
  double p_spk2 = 0.5;
  std::optional<std::pair<double, double>> p_aux;
};

class AsdHead {
 public:
  static AsdHead Init(const AsdHeadConfig &config, std::uint64_t seed);
  AsdHead(const AsdHeadConfig &config, nn::ModelParams params);

  // ModeMismatch if the head or input is in the other mode.
  IndividualOutput ForwardIndividual(const AsdInput &in, bool with_aux = false) const;
  CombinedOutput ForwardCombined(const AsdInput &in, bool with_aux = false) const;

  struct Graph {
    nn::Var av;                  // 1x1 sigmoid or 1x2 softmax
    std::optional<nn::Var> aux;  // same shape, training only
  };
  Graph Build(nn::Tape &tape, const AsdInput &in, bool with_aux) const;
  // L_av + 0.5 L_v. Individual: label 1 = this face speaks. Combined:
  // label is the index of the speaking face.
  nn::Var Loss(nn::Tape &tape, const AsdInput &in, int label) const;

  void ZeroClassifiers();

  const AsdHeadConfig &config() const { return config_; }
  const nn::ModelParams &params() const { return params_; }
  nn::ModelParams &params() { return params_; }

  nn::Checkpoint ToCheckpoint() const;
  static AsdHead FromCheckpoint(const nn::Checkpoint &ckpt);

 private:
  struct ConvPath {
    nn::ParamId wa, ba, wb, bb;
  };
  struct GruIds {
    nn::ParamId wx, wh, bx, bh;
  };
  void BindIds();
  nn::Var Path(nn::Tape &tape, nn::Var x, const ConvPath &p, int stride) const;
  nn::Var Last(nn::Tape &tape, nn::Var x, const GruIds &g) const;

  AsdHeadConfig config_;
  nn::ModelParams params_;
  ConvPath visual_, audio_;
  GruIds av_gru_, aux_gru_;
  nn::ParamId av_w_, av_b_, aux_w_, aux_b_;
};

inline constexpr const char *kCheckpointKind = "asd_head";

struct NormalizedPair {
  double p1 = 0.5;
  double p2 = 0.5;
  bool degenerate = false;
};

// (p1, p2) / (p1 + p2); both at or below 1e-12 gives (0.5, 0.5) flagged.
NormalizedPair NormalizeIndividual(double p1_raw, double p2_raw);

inline constexpr double kAuxWeight = 0.5;
inline constexpr double kDegenerateEps = 1e-12;

double AsdLoss(double l_av, double l_v);
double AsdLoss(const IndividualOutput &out, bool speaking);
double AsdLoss(const CombinedOutput &out, int speaking_face);

struct AsdExample {
  AsdInput input;
  int label = 0;
  std::string utterance_id;
};

// Individual: one example per covering child or adult track, label 1 when
// the track identity matches the speaker. Combined: one example per TwoFaces
// utterance with the faces in random order (seeded) and label the index of
// the speaking face.
std::vector<AsdExample> CollectExamples(const corpus::Corpus &corpus,
                                        const std::vector<std::string> &session_ids, Mode mode,
                                        std::uint64_t swap_seed);

struct AsdTrainConfig {
  AsdHeadConfig arch;  // dims and rho are taken from the data
  train::TrainConfig fit{.lr = 1e-4, .batch_size = 64, .max_epochs = 20};
};

AsdHead TrainAsd(const std::vector<AsdExample> &train_set, const std::vector<AsdExample> &val_set,
                 const AsdTrainConfig &config, train::TrainLog *log = nullptr);
// EmptySplit when a split has no examples; ModeDataMissing when the corpus
// has no utterance usable by the requested mode.
AsdHead TrainAsd(const corpus::Corpus &corpus, const eval::FoldSplit &split,
                 const AsdTrainConfig &config, train::TrainLog *log = nullptr);

}  // namespace diadfuse::asd

#endif  // DIADFUSE_ASD_HEAD_H_
