// tests/acceptance/acceptance.cc

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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
//
//   acceptance [--work DIR] [--only 1,2,5]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <fmt/core.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "diadfuse/asd-head.h"
#include "diadfuse/audio-head.h"
#include "diadfuse/corpus.h"
#include "diadfuse/error.h"
#include "diadfuse/eval.h"
#include "diadfuse/fusion.h"
#include "diadfuse/nn/checkpoint.h"
#include "diadfuse/nn/grad-check.h"
#include "diadfuse/nn/tape.h"
#include "diadfuse/rng.h"
#include "diadfuse/synth.h"

namespace {

namespace fs = std::filesystem;
using namespace diadfuse;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and limits.
constexpr double kFusionTol = 1e-12;
constexpr double kGradTol = 1e-5;
constexpr double kFusedMin = 0.99;
constexpr double kAudioMin = 0.95;
constexpr double kChanceLo = 0.40, kChanceHi = 0.60;
constexpr double kDegradedLo = 0.75, kDegradedHi = 0.90;
constexpr double kFusionGainMin = 0.03;
constexpr double kRuntime1 = 5, kRuntime2 = 60, kRuntime3 = 600, kRuntime5 = 30;

// Pinned experiment settings.
constexpr std::uint64_t kCorpusSeed = 7;
constexpr double kDegradeNoise = 6.5;
const std::uint64_t kDegradeSeeds[] = {7, 8, 9};
const json kRunConfig = {{"seed", 1},
                         {"threads", 1},
                         {"audio", {{"conv_hidden", 64}, {"mlp_hidden", 64}}},
                         {"asd", {{"hidden", 32}}}};

fs::path g_work;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void Check(bool ok, const std::string &what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "!") + what);
  }
};

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteJson(const fs::path &p, const json &j) { std::ofstream(p) << j.dump(1); }

void Cli(const std::string &args) {
  const std::string cmd = std::string(DIADFUSE_BIN) + " " + args + " > /dev/null";
  const int raw = std::system(cmd.c_str());
  if (!WIFEXITED(raw) || WEXITSTATUS(raw) != 0) {
    throw std::runtime_error("command failed: " + cmd);
  }
}

// synth + crossval through the command-line tool; returns the report.
json SynthAndCrossval(const std::string &name, const json &synth_cfg, double noise,
                      const std::string &extra = "") {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  WriteJson(dir / "synth.json", synth_cfg);
  WriteJson(dir / "run.json", kRunConfig);
  Cli(fmt::format("synth --config {} --noise {} --out {}", (dir / "synth.json").string(), noise,
                  (dir / "corpus").string()));
  Cli(fmt::format("crossval --config {} --corpus {} --out {} {}", (dir / "run.json").string(),
                  (dir / "corpus" / "manifest.json").string(), (dir / "cv").string(), extra));
  return json::parse(Slurp(dir / "cv" / "report.json"));
}

double Pooled(const json &report, const std::string &system) {
  return report.at("pooled").at(system).at("f1_macro").get<double>();
}

double PooledIn(const json &report, const std::string &system, const std::string &condition) {
  return report.at("pooled").at(system).at("by_condition").at(condition).at("f1_macro").get<double>();
}

// ---------------------------------------------------------------------------
// 1. Fusion algebra.

double DirectOneFace(double s, double p) { return p * s + (1 - p) * (1 - s); }
std::pair<double, double> DirectTwoFaces(double s1, double s2, double p1, double p2) {
  return {p1 * s1 + p2 * s2, (1 - p1) * s1 + (1 - p2) * s2};
}

Outcome Criterion1() {
  const auto t0 = Clock::now();
  Outcome o;
  Rng rng(DeriveSeed(1, "acceptance/fusion"));
  double max_err = 0;
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s = rng.Uniform(0, 1), p = rng.Uniform(0, 1), q = rng.Uniform(0, 1);
    const double a = rng.Uniform(0, 1), k = rng.Uniform(1e-3, 10);

    const auto one = fusion::FuseOneFace(s, p);
    max_err = std::max({max_err, std::abs(one.child - DirectOneFace(s, p)),
                        std::abs(one.adult - (1 - DirectOneFace(s, p)))});
    const auto two = fusion::FuseTwoFaces(s, 1 - s, p, q);
    const auto [dc, da] = DirectTwoFaces(s, 1 - s, p, q);
    max_err = std::max({max_err, std::abs(two.child - dc), std::abs(two.adult - da)});

    auto bad = [&](bool ok) { violations += !ok; };
    // Complement symmetry and swap symmetry.
    bad(std::abs(fusion::FuseOneFace(s, 1 - p).child - (1 - one.child)) <= kFusionTol);
    bad(std::abs(fusion::FuseOneFace(p, s).child - one.child) <= kFusionTol);
    // Sum to one.
    bad(std::abs(two.child + two.adult - 1) <= kFusionTol);
    bad(std::abs(one.child + one.adult - 1) <= kFusionTol);
    // Argmax scale invariance and neutral-vision collapse hold exactly.
    const fusion::ProbPair pa{a, 1 - a};
    bad(fusion::FuseFinal({k * two.child, k * two.adult}, pa) == fusion::FuseFinal(two, pa));
    bad(fusion::FuseFinal({0.5, 0.5}, pa) == fusion::AudioDecision(pa));
    bad(fusion::FuseFinal(fusion::FuseOneFace(0.5, p), pa) == fusion::AudioDecision(pa));
  }
  const double secs = Seconds(t0);
  o.Check(max_err <= kFusionTol, fmt::format("max |formula - oracle| {:.2e}", max_err));
  o.Check(violations == 0, fmt::format("invariant violations {}", violations));
  o.Check(secs < kRuntime1, fmt::format("{:.2f}s", secs));
  return o;
}

// ---------------------------------------------------------------------------
// 2. Gradient correctness.

nn::Tensor2 RandomTensor(Eigen::Index r, Eigen::Index c, Rng &rng, double scale = 1.0) {
  nn::Tensor2 x(r, c);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.Normal();
  return x;
}

Outcome Criterion2() {
  const auto t0 = Clock::now();
  Outcome o;
  auto report = [&](const std::string &name, const nn::GradCheckReport &r) {
    o.Check(r.Passed(kGradTol),
            fmt::format("{} {:.2e} ({} coords)", name, r.max_rel_error, r.checked));
  };
  Rng rng(DeriveSeed(1, "acceptance/grad"));
  {
    nn::ModelParams p(1);
    const int din = 4, h = 5;
    const double lim = 1 / std::sqrt(double(h));
    const auto wx = p.Add("wx", RandomTensor(din, 3 * h, rng, lim));
    const auto wh = p.Add("wh", RandomTensor(h, 3 * h, rng, lim));
    const auto bx = p.Add("bx", RandomTensor(1, 3 * h, rng, lim));
    const auto bh = p.Add("bh", RandomTensor(1, 3 * h, rng, lim));
    const nn::Tensor2 x = RandomTensor(9, din, rng);
    const nn::Tensor2 w = RandomTensor(h, 1, rng);
    report("gru", nn::GradCheck(
                      [&](nn::Tape &t) {
                        nn::Var s = t.Gru(t.Input(x), t.Param(wx), t.Param(wh), t.Param(bx),
                                          t.Param(bh));
                        return t.Tanh(t.MatMul(t.MeanRows(s), t.Constant(w)));
                      },
                      p));
  }
  {
    const audio::AudioHeadConfig cfg{.layer_count = 3, .input_dim = 4, .conv_hidden = 6,
                                     .conv_layers = 3, .kernel = 3, .mlp_hidden = 5};
    const auto head = audio::AudioHead::Init(cfg, 2);
    audio::AudioFeatures f;
    for (int l = 0; l < 3; ++l) f.layers.push_back(RandomTensor(10, 4, rng));
    report("audio_head", nn::GradCheck(
                             [&](nn::Tape &t) { return head.Loss(t, f, corpus::Speaker::kChild); },
                             head.params()));
  }
  for (asd::Mode mode : {asd::Mode::kIndividual, asd::Mode::kCombined}) {
    const asd::AsdHeadConfig cfg{.mode = mode, .visual_dim = 3, .audio_dim = 2, .hidden = 4,
                                 .rho = 2};
    const auto head = asd::AsdHead::Init(cfg, 3);
    asd::AsdInput in;
    in.mode = mode;
    in.visual.push_back(RandomTensor(6, 3, rng));
    if (mode == asd::Mode::kCombined) in.visual.push_back(RandomTensor(6, 3, rng));
    in.audio = RandomTensor(12, 2, rng);
    report(fmt::format("asd_{}", asd::ToString(mode)),
           nn::GradCheck([&](nn::Tape &t) { return head.Loss(t, in, 1); }, head.params()));
  }
  const double secs = Seconds(t0);
  o.Check(secs < kRuntime2, fmt::format("{:.2f}s", secs));
  return o;
}

// ---------------------------------------------------------------------------
// 3. Synthetic end-to-end.

// Audio-only accuracy of one trained head on one fold's validation sessions
// as the audio is degraded; report only.
std::string DegradeTrend(const fs::path &dir) {
  const corpus::Corpus base = corpus::Preprocess(corpus::LoadManifest(dir / "corpus" / "manifest.json"));
  const auto folds = eval::SessionCvSplit(base.SessionIds(), 5,
                                          DeriveSeed(kRunConfig.at("seed").get<std::uint64_t>(), "cv"));
  const auto head = audio::AudioHead::FromCheckpoint(nn::LoadCheckpoint(dir / "cv" / "fold0" / "audio.ckpt"));
  std::string out = "audio accuracy vs noise on fold0 val:";
  for (double noise : {0.0, 4.0, 8.0}) {
    const corpus::Corpus c = synth::DegradeAudio(base, noise, 3);
    std::size_t right = 0, n = 0;
    for (const auto &sid : folds[0].val) {
      for (const auto &u : c.FindSession(sid)->utterances) {
        right += fusion::AudioDecision(head.Forward(audio::FeaturesFor(c, u))) == u.speaker;
        ++n;
      }
    }
    out += fmt::format(" {}:{:.3f}", noise, double(right) / double(n));
  }
  return out;
}

Outcome Criterion3(std::string *trend) {
  const auto t0 = Clock::now();
  Outcome o;
  const json sep1 = SynthAndCrossval("sep1", {{"seed", kCorpusSeed}}, 0.0);
  o.Check(Pooled(sep1, "fused") >= kFusedMin, fmt::format("fused {:.4f}", Pooled(sep1, "fused")));
  o.Check(Pooled(sep1, "audio") >= kAudioMin, fmt::format("audio {:.4f}", Pooled(sep1, "audio")));
  const json sep0 =
      SynthAndCrossval("sep0", {{"seed", kCorpusSeed}, {"separability", 0.0}}, 0.0);
  const double chance = Pooled(sep0, "audio");
  o.Check(chance >= kChanceLo && chance <= kChanceHi, fmt::format("sep0 audio {:.4f}", chance));
  const double secs = Seconds(t0);
  o.Check(secs < kRuntime3, fmt::format("{:.0f}s", secs));
  *trend = DegradeTrend(g_work / "sep1");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Direction of effect under degraded audio.

Outcome Criterion4() {
  Outcome o;
  int passed = 0;
  for (std::uint64_t seed : kDegradeSeeds) {
    const json r = SynthAndCrossval(fmt::format("degraded{}", seed),
                                    {{"seed", seed}, {"visual_informativeness", 0.9}},
                                    kDegradeNoise);
    const double audio = Pooled(r, "audio"), fused = Pooled(r, "fused");
    const double g1 = PooledIn(r, "fused", "one_face") - PooledIn(r, "audio", "one_face");
    const double g2 = PooledIn(r, "fused", "two_faces") - PooledIn(r, "audio", "two_faces");
    const bool ok = audio >= kDegradedLo && audio <= kDegradedHi &&
                    fused - audio >= kFusionGainMin && g2 >= g1;
    passed += ok;
    o.notes.push_back(fmt::format("{}seed{} audio {:.4f} fused {:.4f} gain1 {:+.4f} gain2 {:+.4f}",
                                  ok ? "" : "!", seed, audio, fused, g1, g2));
  }
  o.Check(2 * passed > static_cast<int>(std::size(kDegradeSeeds)),
          fmt::format("{}/{} seeds", passed, std::size(kDegradeSeeds)));
  return o;
}

// ---------------------------------------------------------------------------
// 5. Protocol properties.

corpus::Corpus RandomCorpus(Rng &rng) {
  corpus::Corpus c;
  c.audio_layers = 1 + static_cast<int>(rng.Below(3));
  c.audio_frame_rate = 25.0 * (1 + static_cast<double>(rng.Below(2)));
  const int dim = 1 + static_cast<int>(rng.Below(3));
  const int sessions = 1 + static_cast<int>(rng.Below(3));
  for (int s = 0; s < sessions; ++s) {
    corpus::Session sess;
    sess.id = fmt::format("s{}", s);
    double t = 0;
    const int utts = static_cast<int>(rng.Below(12));
    for (int u = 0; u < utts; ++u) {
      const std::int64_t ms = 100 + static_cast<std::int64_t>(rng.Below(5000));
      const std::int64_t start = static_cast<std::int64_t>(t * 1000) + 10 * rng.Below(200);
      corpus::Utterance utt{fmt::format("s{}_u{}", s, u), sess.id, start / 1000.0,
                            (start + ms) / 1000.0, corpus::Speaker::kChild,
                            corpus::UttType::kSpeech, fmt::format("s{}_u{}_a", s, u)};
      t = utt.t_end;
      const auto rows = std::max<Eigen::Index>(1, std::llround(ms * c.audio_frame_rate / 1000.0));
      c.embeddings[utt.audio_ref] =
          std::make_shared<const nn::Tensor2>(RandomTensor(rows, dim * c.audio_layers, rng));
      sess.utterances.push_back(std::move(utt));
    }
    c.sessions.push_back(std::move(sess));
  }
  return c;
}

Outcome Criterion5() {
  const auto t0 = Clock::now();
  Outcome o;
  Rng rng(DeriveSeed(1, "acceptance/protocol"));

  std::size_t split_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + static_cast<int>(rng.Below(200));
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back(fmt::format("x{}", i));
    const auto folds = eval::SessionCvSplit(ids, 5, rng.Below(~0ull));
    const std::set<std::string> all(ids.begin(), ids.end());
    std::multiset<std::string> tests;
    for (int k = 0; k < 5; ++k) {
      const auto &f = folds[k];
      std::set<std::string> u(f.train.begin(), f.train.end());
      u.insert(f.val.begin(), f.val.end());
      u.insert(f.test.begin(), f.test.end());
      const double share = n / 5.0;
      split_bad += u != all || u.size() != f.train.size() + f.val.size() + f.test.size();
      split_bad += std::abs(double(f.test.size()) - share) > 1 ||
                   std::abs(double(f.val.size()) - share) > 1 ||
                   std::abs(double(f.train.size()) - 3 * share) > 1;
      tests.insert(f.test.begin(), f.test.end());
    }
    split_bad += tests != std::multiset<std::string>(ids.begin(), ids.end());
  }
  o.Check(split_bad == 0, fmt::format("cv split violations {}", split_bad));

  std::size_t pre_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const corpus::Corpus once = corpus::Preprocess(RandomCorpus(rng));
    const corpus::Corpus twice = corpus::Preprocess(once);
    for (std::size_t s = 0; s < once.sessions.size(); ++s) {
      const auto &a = once.sessions[s].utterances;
      const auto &b = twice.sessions[s].utterances;
      pre_bad += a.size() != b.size();
      for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        const auto ms = a[i].DurationMs();
        const auto rows = once.Embedding(a[i].audio_ref).rows();
        pre_bad += ms <= corpus::kMinDurationMs || ms > corpus::kMaxDurationMs;
        pre_bad += a[i].t_end != b[i].t_end || a[i].t_start != b[i].t_start;
        pre_bad += rows > std::llround(corpus::kMaxDurationMs * once.audio_frame_rate / 1000.0);
        pre_bad += !(once.Embedding(a[i].audio_ref) == twice.Embedding(b[i].audio_ref));
      }
    }
  }
  o.Check(pre_bad == 0, fmt::format("preprocess violations {}", pre_bad));

  std::size_t f1_bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.Below(64);
    std::vector<int> p(n), t(n);
    long m[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.Below(2));
      t[i] = static_cast<int>(rng.Below(2));
      ++m[t[i]][p[i]];
    }
    double brute = 0;
    for (int c = 0; c < 2; ++c) {
      const double denom = 2.0 * m[c][c] + m[1 - c][c] + m[c][1 - c];
      brute += denom > 0 ? 2.0 * m[c][c] / denom : 0.0;
    }
    f1_bad += std::abs(eval::F1Macro(p, t) - brute / 2) > 1e-12;
  }
  o.Check(f1_bad == 0, fmt::format("f1 mismatches {}", f1_bad));

  std::vector<std::string> ids87;
  for (int i = 0; i < 87; ++i) ids87.push_back(fmt::format("z{:02d}", i));
  std::vector<std::size_t> sizes;
  for (const auto &f : eval::SessionCvSplit(ids87, 5, 0)) sizes.push_back(f.test.size());
  std::sort(sizes.rbegin(), sizes.rend());
  o.Check(sizes == std::vector<std::size_t>{18, 18, 17, 17, 17},
          fmt::format("87 sessions -> {}", fmt::join(sizes, ",")));

  const double secs = Seconds(t0);
  o.Check(secs < kRuntime5, fmt::format("{:.2f}s", secs));
  return o;
}

// ---------------------------------------------------------------------------
// 6. Determinism: rerun criterion 3's separable crossval and compare bytes.

std::map<std::string, std::string> Tree(const fs::path &dir) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return out;
}

Outcome Criterion6() {
  Outcome o;
  const fs::path first = g_work / "sep1_first";
  fs::remove_all(first);
  if (!fs::exists(g_work / "sep1" / "cv" / "report.json")) {
    SynthAndCrossval("sep1", {{"seed", kCorpusSeed}}, 0.0);
  }
  fs::rename(g_work / "sep1", first);
  // Same command and paths; only the worker count differs.
  SynthAndCrossval("sep1", {{"seed", kCorpusSeed}}, 0.0, "--threads 2");
  const auto a = Tree(first), b = Tree(g_work / "sep1");
  std::size_t differ = 0;
  for (const auto &[name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      ++differ;
      if (differ <= 5) o.notes.push_back("!differs: " + name);
    }
  }
  o.Check(differ == 0 && a.size() == b.size(), fmt::format("{} files compared", a.size()));
  return o;
}

}  // namespace

int main(int argc, char **argv) {
  std::set<int> only;
  g_work = fs::temp_directory_path() / "diadfuse_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--work DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  fs::create_directories(g_work);

  std::string trend;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, Criterion1},
      {2, Criterion2},
      {5, Criterion5},
      {3, [&] { return Criterion3(&trend); }},
      {6, Criterion6},
      {4, Criterion4},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto &[id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.notes.push_back(std::string("!error: ") + e.what());
    }
    all = all && o.pass;
    std::string line = fmt::format("criterion {}: {} [{}]", id, o.pass ? "PASS" : "FAIL",
                                   fmt::join(o.notes, "; "));
    std::cout << line << std::endl;
    lines[id] = std::move(line);
    if (id == 3 && !trend.empty()) std::cout << "info: " << trend << std::endl;
  }
  std::cout << "\nsummary\n";
  for (const auto &[id, line] : lines) std::cout << line << "\n";
  return all ? 0 : 1;
}
