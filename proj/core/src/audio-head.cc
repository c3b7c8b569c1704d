// core/src/audio-head.cc

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

#include "diadfuse/audio-head.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "diadfuse/error.h"
#include "diadfuse/nn/ops.h"

namespace diadfuse::audio {

using nn::Tensor2;

void AudioFeatures::Check() const {
  if (layers.empty()) Fail(Errc::ShapeMismatch, "audio features need at least one layer");
  for (const auto &l : layers) {
    if (l.rows() != layers[0].rows() || l.cols() != layers[0].cols()) {
      Fail(Errc::ShapeMismatch, "audio layers differ in shape");
    }
  }
  if (layers[0].rows() < 1) Fail(Errc::ShapeMismatch, "audio features have no frames");
}

AudioFeatures FeaturesFor(const corpus::Corpus &corpus, const corpus::Utterance &utt) {
  const Tensor2 &e = corpus.Embedding(utt.audio_ref);
  const int L = corpus.audio_layers;
  if (L < 1 || e.cols() % L != 0) {
    Fail(Errc::ShapeMismatch, "audio embedding width not divisible by layer count: " + utt.id);
  }
  const Eigen::Index d = e.cols() / L;
  AudioFeatures f;
  f.frame_rate = corpus.audio_frame_rate;
  f.layers.reserve(L);
  for (int l = 0; l < L; ++l) f.layers.emplace_back(e.middleCols(l * d, d));
  return f;
}

std::string ToJson(const AudioHeadConfig &c) {
  nlohmann::json j{{"layer_count", c.layer_count}, {"input_dim", c.input_dim},
                   {"conv_hidden", c.conv_hidden}, {"conv_layers", c.conv_layers},
                   {"kernel", c.kernel},           {"mlp_hidden", c.mlp_hidden}};
  return j.dump();
}

AudioHeadConfig AudioHeadConfigFromJson(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AudioHeadConfig c;
    c.layer_count = j.at("layer_count").get<int>();
    c.input_dim = j.at("input_dim").get<int>();
    c.conv_hidden = j.at("conv_hidden").get<int>();
    c.conv_layers = j.at("conv_layers").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
    return c;
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::SchemaViolation, std::string("audio head config: ") + e.what());
  }
}

Tensor2 WeightedLayerAverage(const AudioFeatures &feats, const Tensor2 &layer_logits) {
  feats.Check();
  if (layer_logits.rows() != 1 ||
      layer_logits.cols() != static_cast<Eigen::Index>(feats.layers.size())) {
    Fail(Errc::ShapeMismatch, "layer logits must be 1 x L");
  }
  const Tensor2 w = nn::Softmax(layer_logits);
  Tensor2 out = Tensor2::Zero(feats.frames(), feats.dim());
  for (std::size_t l = 0; l < feats.layers.size(); ++l) out += w(0, l) * feats.layers[l];
  return out;
}

namespace {

void CheckConfig(const AudioHeadConfig &c) {
  if (c.layer_count < 1 || c.input_dim < 1 || c.conv_hidden < 1 || c.conv_layers < 1 ||
      c.kernel < 1 || c.kernel % 2 == 0 || c.mlp_hidden < 1) {
    Fail(Errc::InvalidConfig, "audio head config: sizes must be positive, kernel odd");
  }
}

std::string ConvName(int i, const char *what) {
  return "conv" + std::to_string(i) + "." + what;
}

}  // namespace

AudioHead AudioHead::Init(const AudioHeadConfig &config, std::uint64_t seed) {
  CheckConfig(config);
  Rng rng(DeriveSeed(seed, "audio_head.init"));
  nn::ModelParams p(seed);
  p.Add("layer_logits", Tensor2::Zero(1, config.layer_count));
  int din = config.input_dim;
  for (int i = 0; i < config.conv_layers; ++i) {
    const int rows = config.kernel * din;
    p.Add(ConvName(i, "weight"),
          nn::XavierUniform(rows, config.conv_hidden, rows, config.conv_hidden, rng));
    p.Add(ConvName(i, "bias"), Tensor2::Zero(1, config.conv_hidden));
    din = config.conv_hidden;
  }
  p.Add("fc1.weight",
        nn::XavierUniform(din, config.mlp_hidden, din, config.mlp_hidden, rng));
  p.Add("fc1.bias", Tensor2::Zero(1, config.mlp_hidden));
  p.Add("fc2.weight", nn::XavierUniform(config.mlp_hidden, 2, config.mlp_hidden, 2, rng));
  p.Add("fc2.bias", Tensor2::Zero(1, 2));
  return AudioHead(config, std::move(p));
}

AudioHead::AudioHead(const AudioHeadConfig &config, nn::ModelParams params)
    : config_(config), params_(std::move(params)) {
  CheckConfig(config_);
  BindIds();
}

void AudioHead::BindIds() {
  auto expect = [&](const std::string &name, Eigen::Index r, Eigen::Index c) {
    if (!params_.Contains(name)) Fail(Errc::ShapeMismatch, "audio head missing " + name);
    const auto id = params_.Id(name);
    if (params_[id].rows() != r || params_[id].cols() != c) {
      Fail(Errc::ShapeMismatch, "audio head tensor " + name + " has the wrong shape");
    }
    return id;
  };
  layer_logits_ = expect("layer_logits", 1, config_.layer_count);
  conv_w_.clear();
  conv_b_.clear();
  Eigen::Index din = config_.input_dim;
  for (int i = 0; i < config_.conv_layers; ++i) {
    conv_w_.push_back(expect(ConvName(i, "weight"), config_.kernel * din, config_.conv_hidden));
    conv_b_.push_back(expect(ConvName(i, "bias"), 1, config_.conv_hidden));
    din = config_.conv_hidden;
  }
  fc1_w_ = expect("fc1.weight", din, config_.mlp_hidden);
  fc1_b_ = expect("fc1.bias", 1, config_.mlp_hidden);
  fc2_w_ = expect("fc2.weight", config_.mlp_hidden, 2);
  fc2_b_ = expect("fc2.bias", 1, 2);
  if (params_.size() != 5 + 2 * conv_w_.size()) {
    Fail(Errc::ShapeMismatch, "audio head has unexpected tensors");
  }
}

nn::Var AudioHead::Build(nn::Tape &tape, const AudioFeatures &feats) const {
  feats.Check();
  if (static_cast<int>(feats.layers.size()) != config_.layer_count ||
      feats.dim() != config_.input_dim) {
    Fail(Errc::ShapeMismatch, "audio features do not match the head's layer count or width");
  }
  std::vector<nn::Var> layers;
  layers.reserve(feats.layers.size());
  for (const auto &l : feats.layers) layers.push_back(tape.Input(l));
  nn::Var h = layers.size() == 1
                  ? layers[0]
                  : tape.WeightedSum(tape.SoftmaxRows(tape.Param(layer_logits_)), layers);
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    h = tape.Conv1d(h, tape.Param(conv_w_[i]), config_.kernel, 1, nn::Padding::kSame);
    h = tape.Relu(tape.AddBias(h, tape.Param(conv_b_[i])));
  }
  h = tape.MeanRows(h);
  h = tape.Relu(tape.Dense(h, tape.Param(fc1_w_), tape.Param(fc1_b_)));
  h = tape.Dense(h, tape.Param(fc2_w_), tape.Param(fc2_b_));
  return tape.SoftmaxRows(h);
}

nn::Var AudioHead::Loss(nn::Tape &tape, const AudioFeatures &feats, corpus::Speaker label) const {
  // With two outputs summing to 1, -log P(adult) is the BCE of P(child) at
  // target 0.
  return tape.CrossEntropy(Build(tape, feats), eval::ClassIndex(label));
}

fusion::ProbPair AudioHead::Forward(const AudioFeatures &feats) const {
  nn::Tape tape(params_, false);
  const Tensor2 &p = tape.Value(Build(tape, feats));
  return {p(0, 0), p(0, 1)};
}

void AudioHead::ZeroOutputLayer() {
  params_[fc2_w_].setZero();
  params_[fc2_b_].setZero();
}

nn::Checkpoint AudioHead::ToCheckpoint() const {
  return nn::Checkpoint{kCheckpointKind, ToJson(config_), params_};
}

AudioHead AudioHead::FromCheckpoint(const nn::Checkpoint &ckpt) {
  if (ckpt.kind != kCheckpointKind) {
    Fail(Errc::ModeMismatch, "expected an audio_head checkpoint, got " + ckpt.kind);
  }
  return AudioHead(AudioHeadConfigFromJson(ckpt.config_json), ckpt.params);
}

std::vector<LabeledAudio> CollectExamples(const corpus::Corpus &corpus,
                                          const std::vector<std::string> &session_ids) {
  std::vector<LabeledAudio> out;
  for (const auto &sid : session_ids) {
    const corpus::Session *s = corpus.FindSession(sid);
    if (s == nullptr) Fail(Errc::UnknownUtterance, "unknown session " + sid);
    for (const auto &u : s->utterances) out.push_back({FeaturesFor(corpus, u), u.speaker});
  }
  return out;
}

AudioHead TrainAudio(const std::vector<LabeledAudio> &train_set,
                     const std::vector<LabeledAudio> &val_set, const AudioTrainConfig &config,
                     train::TrainLog *log) {
  if (train_set.empty()) Fail(Errc::EmptySplit, "audio head: empty training split");
  if (val_set.empty()) Fail(Errc::EmptySplit, "audio head: empty validation split");
  AudioHeadConfig arch = config.arch;
  arch.layer_count = static_cast<int>(train_set[0].feats.layers.size());
  arch.input_dim = static_cast<int>(train_set[0].feats.dim());
  const AudioHead init = AudioHead::Init(arch, config.fit.seed);

  train::Objective obj;
  obj.n_train = train_set.size();
  obj.example_grad = [&](const nn::ModelParams &p, std::size_t i, nn::Grads &g) {
    nn::Tape tape(p);
    const nn::Var loss = init.Loss(tape, train_set[i].feats, train_set[i].label);
    tape.Backward(loss, g);
    return tape.Scalar(loss);
  };
  obj.validate = [&](const nn::ModelParams &p) {
    std::vector<int> pred(val_set.size()), truth(val_set.size());
    std::vector<double> loss(val_set.size());
    train::ParallelFor(val_set.size(), config.fit.threads, [&](std::size_t i) {
      nn::Tape tape(p, false);
      const nn::Var probs = init.Build(tape, val_set[i].feats);
      const Tensor2 &v = tape.Value(probs);
      pred[i] = eval::ClassIndex(fusion::AudioDecision({v(0, 0), v(0, 1)}));
      truth[i] = eval::ClassIndex(val_set[i].label);
      loss[i] = tape.Scalar(tape.CrossEntropy(probs, truth[i]));
    });
    double total = 0.0;
    for (double l : loss) total += l;
    return train::ValidationScore{eval::F1Macro(pred, truth),
                                  total / static_cast<double>(loss.size())};
  };
  nn::ModelParams best = train::Fit(init.params(), obj, config.fit, log, "audio");
  return AudioHead(arch, std::move(best));
}

AudioHead TrainAudio(const corpus::Corpus &corpus, const eval::FoldSplit &split,
                     const AudioTrainConfig &config, train::TrainLog *log) {
  return TrainAudio(CollectExamples(corpus, split.train), CollectExamples(corpus, split.val),
                    config, log);
}

}  // namespace diadfuse::audio
