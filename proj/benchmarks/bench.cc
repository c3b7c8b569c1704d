// benchmarks/bench.cc

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

#include <benchmark/benchmark.h>

#include "diadfuse/asd-head.h"
#include "diadfuse/audio-head.h"
#include "diadfuse/fusion.h"
#include "diadfuse/nn/adam.h"
#include "diadfuse/nn/ops.h"
#include "diadfuse/nn/tape.h"
#include "diadfuse/rng.h"

namespace {

using namespace diadfuse;
using nn::Tensor2;

Tensor2 Random(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor2 x(r, c);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.Normal();
  return x;
}

void BM_Conv1d(benchmark::State &state) {
  const auto t = state.range(0), d = state.range(1);
  const Tensor2 x = Random(t, d, 1);
  const Tensor2 w = Random(3 * d, d, 2, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::Conv1d(x, w, 3, 1, nn::Padding::kSame));
  }
  state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_Conv1d)->Args({75, 64})->Args({150, 256});

void BM_GruForward(benchmark::State &state) {
  const auto t = state.range(0), h = state.range(1);
  const Tensor2 x = Random(t, h, 3), wx = Random(h, 3 * h, 4, 0.1), wh = Random(h, 3 * h, 5, 0.1);
  const Tensor2 bx = Tensor2::Zero(1, 3 * h), bh = Tensor2::Zero(1, 3 * h);
  const nn::GruWeights w{wx, wh, bx, bh};
  const nn::RowVec h0 = nn::RowVec::Zero(h);
  for (auto _ : state) benchmark::DoNotOptimize(nn::GruForward(x, w, h0));
  state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_GruForward)->Args({75, 32})->Args({75, 128});

audio::AudioFeatures Features(Eigen::Index t, Eigen::Index d, int layers) {
  audio::AudioFeatures f;
  for (int l = 0; l < layers; ++l) f.layers.push_back(Random(t, d, 10 + l));
  return f;
}

// Forward plus backward for one utterance and one Adam update.
void BM_AudioHeadStep(benchmark::State &state) {
  const int width = static_cast<int>(state.range(0));
  const audio::AudioHeadConfig cfg{.layer_count = 3, .input_dim = 16, .conv_hidden = width,
                                   .conv_layers = 3, .kernel = 3, .mlp_hidden = width};
  auto head = audio::AudioHead::Init(cfg, 1);
  const auto feats = Features(75, 16, 3);
  nn::Adam adam(head.params(), nn::AdamConfig{});
  for (auto _ : state) {
    nn::Grads g(head.params());
    nn::Tape tape(head.params());
    const nn::Var loss = head.Loss(tape, feats, corpus::Speaker::kChild);
    tape.Backward(loss, g);
    adam.Step(head.params(), g);
  }
}
BENCHMARK(BM_AudioHeadStep)->Arg(64)->Arg(256);

void BM_AsdHeadStep(benchmark::State &state) {
  const auto mode = state.range(0) ? asd::Mode::kCombined : asd::Mode::kIndividual;
  const asd::AsdHeadConfig cfg{.mode = mode, .visual_dim = 16, .audio_dim = 16,
                               .hidden = static_cast<int>(state.range(1))};
  auto head = asd::AsdHead::Init(cfg, 2);
  asd::AsdInput in;
  in.mode = mode;
  in.visual.push_back(Random(25, 16, 20));
  if (mode == asd::Mode::kCombined) in.visual.push_back(Random(25, 16, 21));
  in.audio = Random(25, 16, 22);
  nn::Adam adam(head.params(), nn::AdamConfig{});
  for (auto _ : state) {
    nn::Grads g(head.params());
    nn::Tape tape(head.params());
    const nn::Var loss = head.Loss(tape, in, 1);
    tape.Backward(loss, g);
    adam.Step(head.params(), g);
  }
}
BENCHMARK(BM_AsdHeadStep)->Args({0, 32})->Args({1, 32})->Args({1, 128});

void BM_ClassifyUtterance(benchmark::State &state) {
  fusion::UtteranceEvidence ev;
  ev.utterance_id = "u";
  ev.condition.tag = corpus::ConditionTag::kTwoFaces;
  ev.p_a = {0.4, 0.6};
  fusion::TwoFaceEvidence two;
  two.p_spk1 = 0.7;
  two.p_spk2 = 0.3;
  two.prior1 = {"a", 0.9, 4};
  two.prior2 = {"b", 0.1, 4};
  ev.two_faces = two;
  for (auto _ : state) benchmark::DoNotOptimize(fusion::ClassifyUtterance(ev));
}
BENCHMARK(BM_ClassifyUtterance);

}  // namespace

BENCHMARK_MAIN();
