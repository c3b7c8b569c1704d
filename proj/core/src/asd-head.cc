// core/src/asd-head.cc

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

#include "diadfuse/asd-head.h"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "diadfuse/error.h"
#include "diadfuse/nn/ops.h"
#include "diadfuse/rng.h"

namespace diadfuse::asd {

using nn::Tensor2;

std::string_view ToString(Mode m) { return m == Mode::kIndividual ? "individual" : "combined"; }

Mode ParseMode(std::string_view s) {
  if (s == "individual") return Mode::kIndividual;
  if (s == "combined") return Mode::kCombined;
  Fail(Errc::InvalidConfig, "unknown ASD mode: " + std::string(s));
}

void CheckInput(const AsdInput &in, int rho) {
  const std::size_t want = in.mode == Mode::kIndividual ? 1 : 2;
  if (in.visual.size() != want) {
    Fail(Errc::ShapeMismatch, std::string(ToString(in.mode)) + " input needs " +
                                  std::to_string(want) + " visual tensor(s)");
  }
  const Tensor2 &v = in.visual[0];
  if (v.rows() < 1) Fail(Errc::ShapeMismatch, "visual input has no frames");
  if (want == 2 && (in.visual[1].rows() != v.rows() || in.visual[1].cols() != v.cols())) {
    Fail(Errc::ShapeMismatch, "the two visual tensors differ in shape");
  }
  if (rho < 1 || in.audio.rows() != static_cast<Eigen::Index>(rho) * v.rows()) {
    Fail(Errc::AlignmentError, "audio frames " + std::to_string(in.audio.rows()) + " != " +
                                   std::to_string(rho) + " x visual frames " +
                                   std::to_string(v.rows()));
  }
}

namespace {

Tensor2 TrackWindow(const corpus::Corpus &corpus, const corpus::Utterance &utt,
                    const corpus::FaceTrack &track, Eigen::Index frames) {
  const Tensor2 &e = corpus.Embedding(track.visual_ref);
  if (e.rows() < 1) Fail(Errc::EmptyTrack, "track " + track.id + " has no visual frames");
  const std::int64_t offset_ms = corpus::ToMs(utt.t_start) - corpus::ToMs(track.tau_start);
  Eigen::Index start =
      static_cast<Eigen::Index>(std::llround(static_cast<double>(offset_ms) * track.frame_rate / 1000.0));
  start = std::clamp<Eigen::Index>(start, 0, std::max<Eigen::Index>(0, e.rows() - frames));
  Tensor2 out(frames, e.cols());
  for (Eigen::Index t = 0; t < frames; ++t) {
    out.row(t) = e.row(std::min(start + t, e.rows() - 1));
  }
  return out;
}

}  // namespace

namespace {

// Per-utterance mean and variance normalization of each audio channel.
void NormalizeColumns(Tensor2 &x) {
  const Eigen::Index n = x.rows();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double var = n > 1 ? col.squaredNorm() / static_cast<double>(n) : 0.0;
    col /= std::sqrt(var + 1e-8);
  }
}

}  // namespace

AsdInput MakeInput(const corpus::Corpus &corpus, const corpus::Utterance &utt,
                   const std::vector<const corpus::FaceTrack *> &tracks, Mode mode) {
  const int rho = corpus.AudioVideoRatio();
  const Tensor2 &a = corpus.Embedding(utt.audio_ref);
  const Eigen::Index dim = a.cols() / corpus.audio_layers;
  const Eigen::Index tv = a.rows() / rho;
  if (tv < 1) Fail(Errc::AlignmentError, "utterance " + utt.id + " is shorter than one video frame");
  AsdInput in;
  in.mode = mode;
  in.audio = a.topLeftCorner(tv * rho, dim);
  NormalizeColumns(in.audio);
  for (const corpus::FaceTrack *t : tracks) in.visual.push_back(TrackWindow(corpus, utt, *t, tv));
  CheckInput(in, rho);
  return in;
}

std::string ToJson(const AsdHeadConfig &c) {
  nlohmann::json j{{"mode", ToString(c.mode)}, {"visual_dim", c.visual_dim},
                   {"audio_dim", c.audio_dim}, {"hidden", c.hidden},
                   {"rho", c.rho},             {"kernel_a", c.kernel_a},
                   {"kernel_b", c.kernel_b}};
  return j.dump();
}

AsdHeadConfig AsdHeadConfigFromJson(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AsdHeadConfig c;
    c.mode = ParseMode(j.at("mode").get<std::string>());
    c.visual_dim = j.at("visual_dim").get<int>();
    c.audio_dim = j.at("audio_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.rho = j.at("rho").get<int>();
    c.kernel_a = j.at("kernel_a").get<int>();
    c.kernel_b = j.at("kernel_b").get<int>();
    return c;
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::SchemaViolation, std::string("asd head config: ") + e.what());
  }
}

namespace {

void CheckConfig(const AsdHeadConfig &c) {
  if (c.visual_dim < 1 || c.audio_dim < 1 || c.hidden < 1 || c.rho < 1 || c.kernel_a < 1 ||
      c.kernel_b < 1 || c.kernel_a % 2 == 0 || c.kernel_b % 2 == 0) {
    Fail(Errc::InvalidConfig, "asd head config: sizes must be positive, kernels odd");
  }
}

}  // namespace

AsdHead AsdHead::Init(const AsdHeadConfig &config, std::uint64_t seed) {
  CheckConfig(config);
  Rng rng(DeriveSeed(seed, "asd_head.init"));
  const int faces = config.outputs();
  const int h = config.hidden;
  nn::ModelParams p(seed);
  auto conv = [&](const std::string &prefix, int din) {
    for (const auto &[tag, k] : {std::pair{"a", config.kernel_a}, std::pair{"b", config.kernel_b}}) {
      const int rows = k * din;
      p.Add(prefix + ".conv_" + tag + ".weight", nn::XavierUniform(rows, h, rows, h, rng));
      p.Add(prefix + ".conv_" + tag + ".bias", Tensor2::Zero(1, h));
    }
  };
  conv("visual", faces * config.visual_dim);
  conv("audio", faces * config.audio_dim);
  const double lim = 1.0 / std::sqrt(static_cast<double>(h));
  auto gru = [&](const std::string &prefix, int din) {
    p.Add(prefix + ".wx", nn::UniformInit(din, 3 * h, lim, rng));
    p.Add(prefix + ".wh", nn::UniformInit(h, 3 * h, lim, rng));
    p.Add(prefix + ".bx", nn::UniformInit(1, 3 * h, lim, rng));
    p.Add(prefix + ".bh", nn::UniformInit(1, 3 * h, lim, rng));
  };
  gru("av_gru", 2 * h);
  gru("aux_gru", h);
  const int out = config.outputs();
  p.Add("av_fc.weight", nn::XavierUniform(h, out, h, out, rng));
  p.Add("av_fc.bias", Tensor2::Zero(1, out));
  p.Add("aux_fc.weight", nn::XavierUniform(h, out, h, out, rng));
  p.Add("aux_fc.bias", Tensor2::Zero(1, out));
  return AsdHead(config, std::move(p));
}

AsdHead::AsdHead(const AsdHeadConfig &config, nn::ModelParams params)
    : config_(config), params_(std::move(params)) {
  CheckConfig(config_);
  BindIds();
}

void AsdHead::BindIds() {
  auto expect = [&](const std::string &name, Eigen::Index r, Eigen::Index c) {
    if (!params_.Contains(name)) Fail(Errc::ShapeMismatch, "asd head missing " + name);
    const auto id = params_.Id(name);
    if (params_[id].rows() != r || params_[id].cols() != c) {
      Fail(Errc::ShapeMismatch, "asd head tensor " + name + " has the wrong shape");
    }
    return id;
  };
  const int faces = config_.outputs();
  const int h = config_.hidden;
  auto conv = [&](const std::string &prefix, int din) {
    return ConvPath{expect(prefix + ".conv_a.weight", config_.kernel_a * din, h),
                    expect(prefix + ".conv_a.bias", 1, h),
                    expect(prefix + ".conv_b.weight", config_.kernel_b * din, h),
                    expect(prefix + ".conv_b.bias", 1, h)};
  };
  auto gru = [&](const std::string &prefix, int din) {
    return GruIds{expect(prefix + ".wx", din, 3 * h), expect(prefix + ".wh", h, 3 * h),
                  expect(prefix + ".bx", 1, 3 * h), expect(prefix + ".bh", 1, 3 * h)};
  };
  visual_ = conv("visual", faces * config_.visual_dim);
  audio_ = conv("audio", faces * config_.audio_dim);
  av_gru_ = gru("av_gru", 2 * h);
  aux_gru_ = gru("aux_gru", h);
  av_w_ = expect("av_fc.weight", h, config_.outputs());
  av_b_ = expect("av_fc.bias", 1, config_.outputs());
  aux_w_ = expect("aux_fc.weight", h, config_.outputs());
  aux_b_ = expect("aux_fc.bias", 1, config_.outputs());
  if (params_.size() != 20) Fail(Errc::ShapeMismatch, "asd head has unexpected tensors");
}

nn::Var AsdHead::Path(nn::Tape &tape, nn::Var x, const ConvPath &p, int stride) const {
  nn::Var a = tape.Conv1d(x, tape.Param(p.wa), config_.kernel_a, stride, nn::Padding::kSame);
  a = tape.Relu(tape.AddBias(a, tape.Param(p.ba)));
  nn::Var b = tape.Conv1d(x, tape.Param(p.wb), config_.kernel_b, stride, nn::Padding::kSame);
  b = tape.Relu(tape.AddBias(b, tape.Param(p.bb)));
  return tape.Add(a, b);
}

nn::Var AsdHead::Last(nn::Tape &tape, nn::Var x, const GruIds &g) const {
  nn::Var s = tape.Gru(x, tape.Param(g.wx), tape.Param(g.wh), tape.Param(g.bx), tape.Param(g.bh));
  return tape.Row(s, tape.Value(s).rows() - 1);
}

AsdHead::Graph AsdHead::Build(nn::Tape &tape, const AsdInput &in, bool with_aux) const {
  if (in.mode != config_.mode) {
    Fail(Errc::ModeMismatch, std::string(ToString(config_.mode)) + " head given a " +
                                 std::string(ToString(in.mode)) + " input");
  }
  CheckInput(in, config_.rho);
  if (in.visual[0].cols() != config_.visual_dim || in.audio.cols() != config_.audio_dim) {
    Fail(Errc::ShapeMismatch, "asd input widths do not match the head");
  }
  nn::Var v = tape.Input(in.visual[0]);
  nn::Var a = tape.Input(in.audio);
  if (config_.mode == Mode::kCombined) {
    v = tape.ConcatCols(v, tape.Input(in.visual[1]));
    a = tape.ConcatCols(a, a);
  }
  const nn::Var vf = Path(tape, v, visual_, 1);
  const nn::Var af = Path(tape, a, audio_, config_.rho);
  auto classify = [&](nn::Var state, nn::ParamId w, nn::ParamId b) {
    const nn::Var logits = tape.Dense(state, tape.Param(w), tape.Param(b));
    return config_.mode == Mode::kIndividual ? tape.Sigmoid(logits) : tape.SoftmaxRows(logits);
  };
  Graph g;
  g.av = classify(Last(tape, tape.ConcatCols(vf, af), av_gru_), av_w_, av_b_);
  if (with_aux) g.aux = classify(Last(tape, vf, aux_gru_), aux_w_, aux_b_);
  return g;
}

nn::Var AsdHead::Loss(nn::Tape &tape, const AsdInput &in, int label) const {
  const Graph g = Build(tape, in, true);
  nn::Var l_av, l_v;
  if (config_.mode == Mode::kIndividual) {
    l_av = tape.Bce(g.av, label);
    l_v = tape.Bce(*g.aux, label);
  } else {
    l_av = tape.CrossEntropy(g.av, label);
    l_v = tape.CrossEntropy(*g.aux, label);
  }
  return tape.Add(l_av, tape.Scale(l_v, kAuxWeight));
}

IndividualOutput AsdHead::ForwardIndividual(const AsdInput &in, bool with_aux) const {
  if (config_.mode != Mode::kIndividual) {
    Fail(Errc::ModeMismatch, "combined head cannot score an individual input");
  }
  nn::Tape tape(params_, false);
  const Graph g = Build(tape, in, with_aux);
  IndividualOutput out;
  out.p_spk = tape.Scalar(g.av);
  if (g.aux) out.p_aux = tape.Scalar(*g.aux);
  return out;
}

CombinedOutput AsdHead::ForwardCombined(const AsdInput &in, bool with_aux) const {
  if (config_.mode != Mode::kCombined) {
    Fail(Errc::ModeMismatch, "individual head cannot score a combined input");
  }
  nn::Tape tape(params_, false);
  const Graph g = Build(tape, in, with_aux);
  CombinedOutput out;
  out.p_spk1 = tape.Value(g.av)(0, 0);
  out.p_spk2 = tape.Value(g.av)(0, 1);
  if (g.aux) out.p_aux = std::pair{tape.Value(*g.aux)(0, 0), tape.Value(*g.aux)(0, 1)};
  return out;
}

void AsdHead::ZeroClassifiers() {
  for (auto id : {av_w_, av_b_, aux_w_, aux_b_}) params_[id].setZero();
}

nn::Checkpoint AsdHead::ToCheckpoint() const {
  return nn::Checkpoint{kCheckpointKind, ToJson(config_), params_};
}

AsdHead AsdHead::FromCheckpoint(const nn::Checkpoint &ckpt) {
  if (ckpt.kind != kCheckpointKind) {
    Fail(Errc::ModeMismatch, "expected an asd_head checkpoint, got " + ckpt.kind);
  }
  return AsdHead(AsdHeadConfigFromJson(ckpt.config_json), ckpt.params);
}

NormalizedPair NormalizeIndividual(double p1_raw, double p2_raw) {
  if (p1_raw <= kDegenerateEps && p2_raw <= kDegenerateEps) return {0.5, 0.5, true};
  const double s = p1_raw + p2_raw;
  return {p1_raw / s, p2_raw / s, false};
}

double AsdLoss(double l_av, double l_v) { return l_av + kAuxWeight * l_v; }

double AsdLoss(const IndividualOutput &out, bool speaking) {
  if (!out.p_aux) Fail(Errc::ShapeMismatch, "asd loss needs the auxiliary output");
  const double y = speaking ? 1.0 : 0.0;
  return AsdLoss(nn::Bce(out.p_spk, y), nn::Bce(*out.p_aux, y));
}

double AsdLoss(const CombinedOutput &out, int speaking_face) {
  if (!out.p_aux) Fail(Errc::ShapeMismatch, "asd loss needs the auxiliary output");
  auto ce = [](double p) { return -std::log(std::clamp(p, nn::kBceEps, 1.0 - nn::kBceEps)); };
  const bool first = speaking_face == 0;
  return AsdLoss(ce(first ? out.p_spk1 : out.p_spk2),
                 ce(first ? out.p_aux->first : out.p_aux->second));
}

std::vector<AsdExample> CollectExamples(const corpus::Corpus &corpus,
                                        const std::vector<std::string> &session_ids, Mode mode,
                                        std::uint64_t swap_seed) {
  Rng rng(swap_seed);
  std::vector<AsdExample> out;
  for (const auto &sid : session_ids) {
    const corpus::Session *s = corpus.FindSession(sid);
    if (s == nullptr) Fail(Errc::UnknownUtterance, "unknown session " + sid);
    for (const auto &u : s->utterances) {
      const corpus::VisualCondition cond = corpus::ClassifyVisualCondition(u, s->face_tracks);
      if (mode == Mode::kCombined) {
        if (cond.tag != corpus::ConditionTag::kTwoFaces) continue;
        const corpus::FaceTrack *c = corpus.FindTrack(*s, *cond.child_track);
        const corpus::FaceTrack *a = corpus.FindTrack(*s, *cond.adult_track);
        int label = u.speaker == corpus::Speaker::kChild ? 0 : 1;
        if (rng.Bernoulli(0.5)) {
          std::swap(c, a);
          label = 1 - label;
        }
        out.push_back({MakeInput(corpus, u, {c, a}, mode), label, u.id});
        continue;
      }
      if (cond.tag == corpus::ConditionTag::kZeroFace) continue;
      for (const auto &t : s->face_tracks) {
        if (!corpus::TrackCovers(t, u)) continue;
        const bool child = t.identity == corpus::Identity::kChild;
        if (!child && t.identity != corpus::Identity::kAdult) continue;
        const bool speaking = child == (u.speaker == corpus::Speaker::kChild);
        out.push_back({MakeInput(corpus, u, {&t}, mode), speaking ? 1 : 0, u.id});
      }
    }
  }
  return out;
}

AsdHead TrainAsd(const std::vector<AsdExample> &train_set, const std::vector<AsdExample> &val_set,
                 const AsdTrainConfig &config, train::TrainLog *log) {
  if (train_set.empty()) Fail(Errc::EmptySplit, "asd head: empty training split");
  if (val_set.empty()) Fail(Errc::EmptySplit, "asd head: empty validation split");
  const AsdInput &first = train_set[0].input;
  AsdHeadConfig arch = config.arch;
  arch.mode = first.mode;
  arch.visual_dim = static_cast<int>(first.visual[0].cols());
  arch.audio_dim = static_cast<int>(first.audio.cols());
  arch.rho = static_cast<int>(first.audio.rows() / first.visual[0].rows());
  const AsdHead init = AsdHead::Init(arch, config.fit.seed);

  train::Objective obj;
  obj.n_train = train_set.size();
  obj.example_grad = [&](const nn::ModelParams &p, std::size_t i, nn::Grads &g) {
    nn::Tape tape(p);
    const nn::Var loss = init.Loss(tape, train_set[i].input, train_set[i].label);
    tape.Backward(loss, g);
    return tape.Scalar(loss);
  };
  obj.validate = [&](const nn::ModelParams &p) {
    std::vector<int> pred(val_set.size()), truth(val_set.size());
    std::vector<double> loss(val_set.size());
    train::ParallelFor(val_set.size(), config.fit.threads, [&](std::size_t i) {
      nn::Tape tape(p, false);
      const AsdHead::Graph g = init.Build(tape, val_set[i].input, false);
      const int y = val_set[i].label;
      truth[i] = y;
      if (arch.mode == Mode::kIndividual) {
        pred[i] = tape.Scalar(g.av) > 0.5 ? 1 : 0;
        loss[i] = tape.Scalar(tape.Bce(g.av, y));
      } else {
        const Tensor2 &v = tape.Value(g.av);
        pred[i] = v(0, 0) > v(0, 1) ? 0 : 1;
        loss[i] = tape.Scalar(tape.CrossEntropy(g.av, y));
      }
    });
    double total = 0.0;
    for (double l : loss) total += l;
    return train::ValidationScore{eval::F1Macro(pred, truth),
                                  total / static_cast<double>(loss.size())};
  };
  nn::ModelParams best = train::Fit(init.params(), obj, config.fit, log,
                                    std::string("asd-") + std::string(ToString(arch.mode)));
  return AsdHead(arch, std::move(best));
}

AsdHead TrainAsd(const corpus::Corpus &corpus, const eval::FoldSplit &split,
                 const AsdTrainConfig &config, train::TrainLog *log) {
  const Mode mode = config.arch.mode;
  const std::uint64_t seed = config.fit.seed;
  auto train_set = CollectExamples(corpus, split.train, mode, DeriveSeed(seed, "asd.swap.train"));
  if (train_set.empty()) {
    if (CollectExamples(corpus, corpus.SessionIds(), mode, 0).empty()) {
      Fail(Errc::ModeDataMissing, std::string("no utterances usable by the ") +
                                      std::string(ToString(mode)) + " ASD head");
    }
    Fail(Errc::EmptySplit, "asd head: empty training split");
  }
  auto val_set = CollectExamples(corpus, split.val, mode, DeriveSeed(seed, "asd.swap.val"));
  return TrainAsd(train_set, val_set, config, log);
}

}  // namespace diadfuse::asd
