// core/src/synth.cc

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

#include "diadfuse/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "diadfuse/error.h"
#include "diadfuse/rng.h"

namespace diadfuse::synth {

using corpus::ConditionTag;
using corpus::Identity;
using corpus::Speaker;
using corpus::UttType;
using nn::RowVec;
using nn::Tensor2;

namespace {

void Require(bool ok, const std::string &what) {
  if (!ok) Fail(Errc::InvalidConfig, "synth config: " + what);
}

void CheckMix(const std::array<double, 4> &mix, const char *name) {
  double total = 0.0;
  for (double p : mix) {
    Require(p >= 0.0 && std::isfinite(p), std::string(name) + " has a negative entry");
    total += p;
  }
  Require(std::abs(total - 1.0) <= 1e-9, std::string(name) + " must sum to 1");
}

}  // namespace

void SynthConfig::Validate() const {
  Require(n_sessions >= 1 && utterances_per_session >= 1, "counts must be positive");
  Require(audio_dim >= 1 && audio_layers >= 1 && visual_dim >= 1, "dims must be positive");
  const double ratio = audio_frame_rate / corpus::kDefaultVideoFps;
  Require(audio_frame_rate > 0 && ratio == std::floor(ratio),
          "audio_frame_rate must be a positive multiple of 25");
  Require(separability >= 0.0 && separability <= 1.0, "separability must lie in [0, 1]");
  Require(visual_informativeness >= 0.0 && visual_informativeness <= 1.0,
          "visual_informativeness must lie in [0, 1]");
  CheckMix(condition_mix, "condition_mix");
  CheckMix(type_mix, "type_mix");
  Require(child_fraction >= 0.0 && child_fraction <= 1.0, "child_fraction must lie in [0, 1]");
  Require(child_fraction_spread >= 0.0, "child_fraction_spread must be non-negative");
  Require(duration_min > 0.0 && duration_max >= duration_min && duration_median > 0.0 &&
              duration_sigma >= 0.0,
          "bad duration distribution");
  for (double v : {class_distance, audio_noise, session_offset, envelope_gain,
                   articulation_gain, common_mode, visual_noise, bracket_noise}) {
    Require(v >= 0.0 && std::isfinite(v), "gains and noise levels must be non-negative");
  }
  for (double p : {one_face_speaker_visible, decoy_track_rate, bracket_flip}) {
    Require(p >= 0.0 && p <= 1.0, "rates must lie in [0, 1]");
  }
  Require(bracket_noise <= 1.0, "bracket_noise must lie in [0, 1]");
  Require(images_per_second > 0.0, "images_per_second must be positive");
}

namespace {

constexpr std::array<const char *, 4> kConditionKeys{"zero_face", "one_face", "two_faces",
                                                     "others"};
constexpr std::array<const char *, 4> kTypeKeys{"speech", "nonverbal", "unintelligible",
                                                "singing"};

template <class T>
void Take(const nlohmann::json &j, const char *key, T &out, std::set<std::string> &seen) {
  seen.insert(key);
  if (j.contains(key)) out = j.at(key).get<T>();
}

void TakeMix(const nlohmann::json &j, const char *key, const std::array<const char *, 4> &names,
             std::array<double, 4> &out, std::set<std::string> &seen) {
  seen.insert(key);
  if (!j.contains(key)) return;
  const auto &m = j.at(key);
  Require(m.is_object(), std::string(key) + " must be an object");
  std::array<double, 4> mix{};
  for (const auto &[k, v] : m.items()) {
    const auto it = std::find_if(names.begin(), names.end(), [&](const char *n) { return k == n; });
    Require(it != names.end(), "unknown " + std::string(key) + " entry " + k);
    mix[it - names.begin()] = v.get<double>();
  }
  out = mix;
}

}  // namespace

SynthConfig SynthConfigFromJson(const std::string &text) {
  SynthConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    Require(j.is_object(), "top level must be an object");
    std::set<std::string> seen;
    Take(j, "n_sessions", c.n_sessions, seen);
    Take(j, "utterances_per_session", c.utterances_per_session, seen);
    Take(j, "audio_dim", c.audio_dim, seen);
    Take(j, "audio_layers", c.audio_layers, seen);
    Take(j, "audio_frame_rate", c.audio_frame_rate, seen);
    Take(j, "visual_dim", c.visual_dim, seen);
    Take(j, "separability", c.separability, seen);
    Take(j, "visual_informativeness", c.visual_informativeness, seen);
    TakeMix(j, "condition_mix", kConditionKeys, c.condition_mix, seen);
    TakeMix(j, "type_mix", kTypeKeys, c.type_mix, seen);
    Take(j, "child_fraction", c.child_fraction, seen);
    Take(j, "child_fraction_spread", c.child_fraction_spread, seen);
    Take(j, "duration_median", c.duration_median, seen);
    Take(j, "duration_sigma", c.duration_sigma, seen);
    Take(j, "duration_min", c.duration_min, seen);
    Take(j, "duration_max", c.duration_max, seen);
    Take(j, "class_distance", c.class_distance, seen);
    Take(j, "audio_noise", c.audio_noise, seen);
    Take(j, "session_offset", c.session_offset, seen);
    Take(j, "envelope_gain", c.envelope_gain, seen);
    Take(j, "articulation_gain", c.articulation_gain, seen);
    Take(j, "common_mode", c.common_mode, seen);
    Take(j, "visual_noise", c.visual_noise, seen);
    Take(j, "one_face_speaker_visible", c.one_face_speaker_visible, seen);
    Take(j, "decoy_track_rate", c.decoy_track_rate, seen);
    Take(j, "bracket_noise", c.bracket_noise, seen);
    Take(j, "bracket_flip", c.bracket_flip, seen);
    Take(j, "images_per_second", c.images_per_second, seen);
    Take(j, "seed", c.seed, seen);
    for (const auto &[k, v] : j.items()) Require(seen.count(k) != 0, "unknown key " + k);
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::InvalidConfig, std::string("synth config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::string ToJson(const SynthConfig &c) {
  nlohmann::json cm, tm;
  for (int i = 0; i < 4; ++i) {
    cm[kConditionKeys[i]] = c.condition_mix[i];
    tm[kTypeKeys[i]] = c.type_mix[i];
  }
  nlohmann::json j{{"n_sessions", c.n_sessions},
                   {"utterances_per_session", c.utterances_per_session},
                   {"audio_dim", c.audio_dim},
                   {"audio_layers", c.audio_layers},
                   {"audio_frame_rate", c.audio_frame_rate},
                   {"visual_dim", c.visual_dim},
                   {"separability", c.separability},
                   {"visual_informativeness", c.visual_informativeness},
                   {"condition_mix", cm},
                   {"type_mix", tm},
                   {"child_fraction", c.child_fraction},
                   {"child_fraction_spread", c.child_fraction_spread},
                   {"duration_median", c.duration_median},
                   {"duration_sigma", c.duration_sigma},
                   {"duration_min", c.duration_min},
                   {"duration_max", c.duration_max},
                   {"class_distance", c.class_distance},
                   {"audio_noise", c.audio_noise},
                   {"session_offset", c.session_offset},
                   {"envelope_gain", c.envelope_gain},
                   {"articulation_gain", c.articulation_gain},
                   {"common_mode", c.common_mode},
                   {"visual_noise", c.visual_noise},
                   {"one_face_speaker_visible", c.one_face_speaker_visible},
                   {"decoy_track_rate", c.decoy_track_rate},
                   {"bracket_noise", c.bracket_noise},
                   {"bracket_flip", c.bracket_flip},
                   {"images_per_second", c.images_per_second},
                   {"seed", c.seed}};
  return j.dump(1);
}

namespace {

// Audio-side and articulation-side strength per utterance type.
constexpr std::array<double, 4> kTypeAudio{1.0, 0.7, 0.85, 0.9};
constexpr std::array<double, 4> kTypeArticulation{1.0, 0.4, 0.7, 0.8};

double F32(double v) { return static_cast<double>(static_cast<float>(v)); }

void RoundToF32(Tensor2 &t) { t = t.unaryExpr(&F32); }

RowVec UnitVector(int dim, Rng &rng) {
  RowVec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  return v / v.norm();
}

RowVec GaussianVector(int dim, double scale, Rng &rng) {
  RowVec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * rng.Normal();
  return v;
}

// Slow periodic envelope in [0, 1].
struct Envelope {
  double freq = 3.0;
  double phase = 0.0;
  double operator()(double t) const {
    return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * freq * t + phase);
  }
  static Envelope Draw(Rng &rng) {
    return Envelope{rng.Uniform(2.0, 5.0), rng.Uniform(0.0, 2.0 * std::numbers::pi)};
  }
};

struct Geometry {
  std::vector<RowVec> class_dir;  // per audio layer
  std::vector<double> class_scale;
  RowVec envelope_dir;            // audio layer 0
  RowVec articulation_dir;        // visual
};

Geometry MakeGeometry(const SynthConfig &c) {
  Rng rng(DeriveSeed(c.seed, "synth/geometry"));
  Geometry g;
  for (int l = 0; l < c.audio_layers; ++l) {
    g.class_dir.push_back(UnitVector(c.audio_dim, rng));
    g.class_scale.push_back(c.class_distance * (l + 1) / c.audio_layers);
  }
  RowVec e = UnitVector(c.audio_dim, rng);
  if (c.audio_dim > 1) {
    e -= e.dot(g.class_dir[0]) * g.class_dir[0];
    e /= e.norm();
  }
  g.envelope_dir = e;
  g.articulation_dir = UnitVector(c.visual_dim, rng);
  return g;
}

struct UttPlan {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  Envelope speech;
  Envelope nuisance;
  double nuisance_gain = 0.0;
  double articulation = 0.0;
};

std::string SessionId(int s) { return fmt::format("s{:03d}", s); }

corpus::BracketDist DrawBrackets(bool child, Rng &rng, const SynthConfig &c) {
  bool as_child = child;
  if (rng.Bernoulli(c.bracket_flip)) as_child = !as_child;
  const std::size_t peak = as_child ? rng.Below(3) : 3 + rng.Below(6);
  corpus::BracketDist d{};
  double total = 0.0;
  for (double &x : d) {
    x = rng.Uniform();
    total += x;
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = c.bracket_noise * d[i] / total + (i == peak ? 1.0 - c.bracket_noise : 0.0);
  }
  return d;
}

class SessionBuilder {
 public:
  SessionBuilder(const SynthConfig &c, const Geometry &g, int index, corpus::Corpus &out)
      : c_(c), g_(g), rng_(DeriveSeed(c.seed, "synth/session/" + std::to_string(index))),
        out_(out) {
    session_.id = SessionId(index);
    for (int l = 0; l < c.audio_layers; ++l) {
      offsets_.push_back(GaussianVector(c.audio_dim, c.session_offset, rng_));
    }
    child_fraction_ = std::clamp(c.child_fraction + c.child_fraction_spread * rng_.Normal(),
                                 0.02, 0.98);
    if (c.child_fraction == 0.0 || c.child_fraction == 1.0) child_fraction_ = c.child_fraction;
  }

  corpus::Session Build() {
    std::int64_t t_ms = std::llround(rng_.Uniform(600.0, 1200.0));
    for (int u = 0; u < c_.utterances_per_session; ++u) {
      t_ms = AddUtterance(u, t_ms) + std::llround(rng_.Uniform(600.0, 1500.0));
    }
    nlohmann::json meta{{"synthetic", true}, {"child_fraction", child_fraction_}};
    session_.metadata_json = meta.dump();
    return std::move(session_);
  }

 private:
  std::int64_t AddUtterance(int index, std::int64_t start_ms) {
    corpus::Utterance utt;
    utt.id = fmt::format("{}_u{:04d}", session_.id, index);
    utt.session_id = session_.id;
    utt.speaker = rng_.Bernoulli(child_fraction_) ? Speaker::kChild : Speaker::kAdult;
    const std::size_t type = rng_.Categorical({c_.type_mix.begin(), c_.type_mix.end()});
    utt.type = static_cast<UttType>(type);
    const double dur = std::clamp(
        std::exp(std::log(c_.duration_median) + c_.duration_sigma * rng_.Normal()),
        c_.duration_min, c_.duration_max);
    UttPlan plan;
    plan.start_ms = start_ms;
    plan.end_ms = start_ms + std::max<std::int64_t>(1, std::llround(dur * 1000.0));
    plan.speech = Envelope::Draw(rng_);
    plan.nuisance = Envelope::Draw(rng_);
    plan.nuisance_gain = c_.common_mode * std::abs(rng_.Normal()) * c_.articulation_gain;
    plan.articulation =
        c_.visual_informativeness * c_.articulation_gain * kTypeArticulation[type];
    utt.t_start = static_cast<double>(plan.start_ms) / 1000.0;
    utt.t_end = static_cast<double>(plan.end_ms) / 1000.0;
    utt.audio_ref = utt.id + "_a";
    out_.embeddings[utt.audio_ref] = std::make_shared<const Tensor2>(Audio(utt, plan, type));

    const auto cond = static_cast<ConditionTag>(
        rng_.Categorical({c_.condition_mix.begin(), c_.condition_mix.end()}));
    const Identity spk =
        utt.speaker == Speaker::kChild ? Identity::kChild : Identity::kAdult;
    const Identity other = spk == Identity::kChild ? Identity::kAdult : Identity::kChild;
    switch (cond) {
      case ConditionTag::kZeroFace:
        if (rng_.Bernoulli(c_.decoy_track_rate)) {
          const std::int64_t half = (plan.end_ms - plan.start_ms) / 2 + 1;
          AddTrack(plan, rng_.Bernoulli(0.5) ? spk : other, spk, plan.start_ms + half,
                   plan.end_ms + Pad());
        }
        break;
      case ConditionTag::kOneFace:
        AddCovering(plan, rng_.Bernoulli(c_.one_face_speaker_visible) ? spk : other, spk);
        break;
      case ConditionTag::kTwoFaces: {
        const bool child_first = rng_.Bernoulli(0.5);
        AddCovering(plan, child_first ? Identity::kChild : Identity::kAdult, spk);
        AddCovering(plan, child_first ? Identity::kAdult : Identity::kChild, spk);
        break;
      }
      case ConditionTag::kOthers:
        switch (rng_.Below(4)) {
          case 0:
            AddCovering(plan, Identity::kChild, spk);
            AddCovering(plan, Identity::kThirdPerson, spk);
            break;
          case 1:
            AddCovering(plan, Identity::kAdult, spk);
            AddCovering(plan, Identity::kUnclear, spk);
            break;
          case 2:
            AddCovering(plan, Identity::kChild, spk);
            AddCovering(plan, Identity::kChild, spk);
            break;
          default:
            AddCovering(plan, Identity::kUnclear, spk);
            break;
        }
        break;
    }
    session_.utterances.push_back(std::move(utt));
    return plan.end_ms;
  }

  Tensor2 Audio(const corpus::Utterance &utt, const UttPlan &plan, std::size_t type) {
    const double rate = c_.audio_frame_rate;
    const auto rows = std::max<Eigen::Index>(
        1, std::llround(static_cast<double>(plan.end_ms - plan.start_ms) * rate / 1000.0));
    const int d = c_.audio_dim;
    const double sign = utt.speaker == Speaker::kChild ? 1.0 : -1.0;
    Tensor2 a(rows, static_cast<Eigen::Index>(d) * c_.audio_layers);
    for (Eigen::Index t = 0; t < rows; ++t) {
      const double time = static_cast<double>(plan.start_ms) / 1000.0 + t / rate;
      for (int l = 0; l < c_.audio_layers; ++l) {
        RowVec x = sign * c_.separability * g_.class_scale[l] * kTypeAudio[type] * g_.class_dir[l] +
                   offsets_[l] + GaussianVector(d, c_.audio_noise, rng_);
        if (l == 0) x += c_.envelope_gain * plan.speech(time) * g_.envelope_dir;
        a.block(t, static_cast<Eigen::Index>(l) * d, 1, d) = x;
      }
    }
    RoundToF32(a);
    return a;
  }

  std::int64_t Pad() { return std::llround(rng_.Uniform(50.0, 500.0)); }

  void AddCovering(const UttPlan &plan, Identity identity, Identity speaker) {
    const std::int64_t before = Pad();
    const std::int64_t after = Pad();
    AddTrack(plan, identity, speaker, std::max<std::int64_t>(0, plan.start_ms - before),
             plan.end_ms + after);
  }

  void AddTrack(const UttPlan &plan, Identity identity, Identity speaker, std::int64_t tau_s,
                std::int64_t tau_e) {
    corpus::FaceTrack track;
    track.id = fmt::format("{}_t{:04d}", session_.id, session_.face_tracks.size());
    track.session_id = session_.id;
    track.tau_start = static_cast<double>(tau_s) / 1000.0;
    track.tau_end = static_cast<double>(tau_e) / 1000.0;
    track.identity = identity;
    track.frame_rate = out_.video_frame_rate;
    track.visual_ref = track.id + "_v";

    // Only the first track bearing the speaker's identity articulates.
    const bool speaking = identity == speaker && !speaker_tracked_.count(plan.start_ms);
    if (speaking) speaker_tracked_.insert(plan.start_ms);

    const double fps = track.frame_rate;
    const auto frames = std::max<Eigen::Index>(
        1, std::llround(static_cast<double>(tau_e - tau_s) * fps / 1000.0));
    const int dv = c_.visual_dim;
    RowVec appearance = GaussianVector(dv, 1.0, rng_);
    appearance -= appearance.dot(g_.articulation_dir) * g_.articulation_dir;
    Tensor2 v(frames, dv);
    for (Eigen::Index k = 0; k < frames; ++k) {
      const double time = static_cast<double>(tau_s) / 1000.0 + k / fps;
      const std::int64_t time_ms = tau_s + std::llround(k * 1000.0 / fps);
      RowVec x = appearance + GaussianVector(dv, c_.visual_noise, rng_);
      if (time_ms >= plan.start_ms && time_ms < plan.end_ms) {
        double art = plan.nuisance_gain * plan.nuisance(time);
        if (speaking) art += plan.articulation * plan.speech(time);
        x += art * g_.articulation_dir;
      }
      v.row(k) = x;
    }
    RoundToF32(v);
    out_.embeddings[track.visual_ref] = std::make_shared<const Tensor2>(std::move(v));

    const bool child = identity == Identity::kChild ||
                       (identity == Identity::kUnclear && rng_.Bernoulli(0.5));
    const auto images = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(tau_e - tau_s) * c_.images_per_second / 1000.0));
    for (std::int64_t i = 0; i < images; ++i) {
      track.bracket_dists.push_back(DrawBrackets(child, rng_, c_));
    }
    session_.face_tracks.push_back(std::move(track));
  }

  const SynthConfig &c_;
  const Geometry &g_;
  Rng rng_;
  corpus::Corpus &out_;
  corpus::Session session_;
  std::vector<RowVec> offsets_;
  double child_fraction_ = 0.5;
  std::set<std::int64_t> speaker_tracked_;
};

}  // namespace

corpus::Corpus Generate(const SynthConfig &config) {
  config.Validate();
  corpus::Corpus out;
  out.audio_layers = config.audio_layers;
  out.audio_frame_rate = config.audio_frame_rate;
  out.video_frame_rate = corpus::kDefaultVideoFps;
  const Geometry geometry = MakeGeometry(config);
  for (int s = 0; s < config.n_sessions; ++s) {
    out.sessions.push_back(SessionBuilder(config, geometry, s, out).Build());
  }
  return out;
}

corpus::Corpus DegradeAudio(const corpus::Corpus &corpus, double noise_level, std::uint64_t seed) {
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    Fail(Errc::InvalidConfig, "noise_level must be non-negative");
  }
  corpus::Corpus out = corpus;
  if (noise_level == 0.0) return out;
  for (const auto &s : out.sessions) {
    for (const auto &u : s.utterances) {
      Rng rng(DeriveSeed(seed, "degrade/" + u.id));
      Tensor2 a = corpus.Embedding(u.audio_ref);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] += noise_level * rng.Normal();
      RoundToF32(a);
      out.embeddings[u.audio_ref] = std::make_shared<const Tensor2>(std::move(a));
    }
  }
  return out;
}

}  // namespace diadfuse::synth
