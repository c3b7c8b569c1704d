// include/diadfuse/audio-head.h

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

#ifndef DIADFUSE_AUDIO_HEAD_H_
#define DIADFUSE_AUDIO_HEAD_H_

#include <cstdint>
#include <string>
#include <vector>

#include "diadfuse/corpus.h"
#include "diadfuse/eval.h"
#include "diadfuse/fusion.h"
#include "diadfuse/nn/checkpoint.h"
#include "diadfuse/nn/tape.h"
#include "diadfuse/training.h"

namespace diadfuse::audio {

// Per-layer encoder hidden states of one utterance, each [T x D].
struct AudioFeatures {
  std::vector<nn::Tensor2> layers;
  double frame_rate = 50.0;

  Eigen::Index frames() const { return layers.empty() ? 0 : layers[0].rows(); }
  Eigen::Index dim() const { return layers.empty() ? 0 : layers[0].cols(); }
  void Check() const;  // ShapeMismatch
};

// Splits the stored [T x (L*D)] embedding into its L layer blocks.
AudioFeatures FeaturesFor(const corpus::Corpus &corpus, const corpus::Utterance &utt);

struct AudioHeadConfig {
  int layer_count = 1;
  int input_dim = 0;
  int conv_hidden = 256;
  int conv_layers = 3;
  int kernel = 3;
  int mlp_hidden = 256;
};

std::string ToJson(const AudioHeadConfig &c);
AudioHeadConfig AudioHeadConfigFromJson(const std::string &text);

// sum_l softmax(logits)_l * layer_l; logits is 1 x L.
nn::Tensor2 WeightedLayerAverage(const AudioFeatures &feats, const nn::Tensor2 &layer_logits);

class AudioHead {
 public:
  static AudioHead Init(const AudioHeadConfig &config, std::uint64_t seed);
  // Takes ownership of params; ShapeMismatch if they do not fit config.
  AudioHead(const AudioHeadConfig &config, nn::ModelParams params);

  // (P_child, P_adult).
  fusion::ProbPair Forward(const AudioFeatures &feats) const;
  // Records the head on `tape` and returns the 1 x 2 probability node
  // (child, adult). The tape may be bound to any params with this layout.
  nn::Var Build(nn::Tape &tape, const AudioFeatures &feats) const;
  // BCE on P_child with child = 1.
  nn::Var Loss(nn::Tape &tape, const AudioFeatures &feats, corpus::Speaker label) const;

  void ZeroOutputLayer();

  const AudioHeadConfig &config() const { return config_; }
  const nn::ModelParams &params() const { return params_; }
  nn::ModelParams &params() { return params_; }

  nn::Checkpoint ToCheckpoint() const;
  static AudioHead FromCheckpoint(const nn::Checkpoint &ckpt);

 private:
  void BindIds();

  AudioHeadConfig config_;
  nn::ModelParams params_;
  nn::ParamId layer_logits_;
  std::vector<nn::ParamId> conv_w_, conv_b_;
  nn::ParamId fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

inline constexpr const char *kCheckpointKind = "audio_head";

struct LabeledAudio {
  AudioFeatures feats;
  corpus::Speaker label = corpus::Speaker::kAdult;
};

std::vector<LabeledAudio> CollectExamples(const corpus::Corpus &corpus,
                                          const std::vector<std::string> &session_ids);

struct AudioTrainConfig {
  AudioHeadConfig arch;  // layer_count and input_dim are taken from the data
  train::TrainConfig fit{.lr = 5e-5, .batch_size = 64, .max_epochs = 20};
};

AudioHead TrainAudio(const std::vector<LabeledAudio> &train_set,
                     const std::vector<LabeledAudio> &val_set, const AudioTrainConfig &config,
                     train::TrainLog *log = nullptr);
AudioHead TrainAudio(const corpus::Corpus &corpus, const eval::FoldSplit &split,
                     const AudioTrainConfig &config, train::TrainLog *log = nullptr);

}  // namespace diadfuse::audio

#endif  // DIADFUSE_AUDIO_HEAD_H_
