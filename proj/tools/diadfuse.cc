// tools/diadfuse.cc

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

// Batch front end: synth, train-audio, train-asd, classify, evaluate,
// crossval. Failures print {"error": <kind>, "detail": <text>} on stderr and
// exit nonzero.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "diadfuse/asd-head.h"
#include "diadfuse/audio-head.h"
#include "diadfuse/corpus.h"
#include "diadfuse/error.h"
#include "diadfuse/eval.h"
#include "diadfuse/fusion.h"
#include "diadfuse/log.h"
#include "diadfuse/nn/checkpoint.h"
#include "diadfuse/pipeline.h"
#include "diadfuse/rng.h"
#include "diadfuse/synth.h"
#include "diadfuse/training.h"

namespace fs = std::filesystem;
using namespace diadfuse;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::optional<std::string> mode;
  std::string corpus;
  int fold = 0;
  int classify_fold = -1;
  double noise = 0.0;
  std::string models;
  std::string records;
};

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

pipeline::RunConfig RunConfigFor(const Options &o) {
  pipeline::RunConfig c;
  if (!o.config.empty()) {
    c = pipeline::LoadRunConfig(o.config);
  } else {
    c.threads = train::DefaultThreads();
  }
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (c.threads < 1) Fail(Errc::UsageError, "--threads must be at least 1");
  if (!o.corpus.empty()) c.corpus = o.corpus;
  if (o.mode) c.two_face_source = fusion::ParseTwoFaceSource(*o.mode);
  return c;
}

corpus::Corpus LoadCorpus(const pipeline::RunConfig &c) {
  if (c.corpus.empty()) Fail(Errc::UsageError, "no corpus given (--corpus or config.corpus)");
  return corpus::Preprocess(corpus::LoadManifest(c.corpus));
}

fs::path OutDir(const Options &o) {
  if (o.out.empty()) Fail(Errc::UsageError, "--out is required");
  fs::create_directories(o.out);
  return o.out;
}

eval::FoldSplit FoldOf(const corpus::Corpus &corpus, const pipeline::RunConfig &c, int fold) {
  const auto splits =
      eval::SessionCvSplit(corpus.SessionIds(), c.folds, DeriveSeed(c.seed, "cv"));
  if (fold < 0 || fold >= static_cast<int>(splits.size())) {
    Fail(Errc::UsageError, "--fold must lie in [0, " + std::to_string(splits.size()) + ")");
  }
  return splits[fold];
}

std::string Stage(int fold) { return "fold" + std::to_string(fold); }

int CmdSynth(const Options &o) {
  synth::SynthConfig sc;
  if (!o.config.empty()) sc = synth::SynthConfigFromJson(ReadFile(o.config));
  if (o.seed) sc.seed = *o.seed;
  if (o.noise < 0.0) Fail(Errc::UsageError, "--noise must be non-negative");
  corpus::Corpus c = synth::Generate(sc);
  if (o.noise > 0.0) c = synth::DegradeAudio(c, o.noise, DeriveSeed(sc.seed, "degrade"));
  const fs::path manifest = corpus::WriteCorpus(c, OutDir(o));
  pipeline::WriteText(fs::path(o.out) / "synth_config.json", synth::ToJson(sc));
  std::cout << nlohmann::json{{"manifest", manifest.string()},
                              {"sessions", c.sessions.size()},
                              {"utterances", c.UtteranceCount()}}
                   .dump()
            << "\n";
  return 0;
}

int CmdTrainAudio(const Options &o) {
  const auto rc = RunConfigFor(o);
  const auto corpus = LoadCorpus(rc);
  const auto split = FoldOf(corpus, rc, o.fold);
  train::TrainLog log;
  const auto head = audio::TrainAudio(corpus, split, pipeline::AudioConfigFor(rc, Stage(o.fold)), &log);
  const fs::path dir = OutDir(o);
  nn::SaveCheckpoint(dir / "audio.ckpt", head.ToCheckpoint());
  pipeline::WriteText(dir / "audio_train_log.json", log.ToJson());
  std::cout << nlohmann::json{{"checkpoint", (dir / "audio.ckpt").string()},
                              {"best_epoch", log.best_epoch},
                              {"val_f1", log.best_val_f1}}
                   .dump()
            << "\n";
  return 0;
}

int CmdTrainAsd(const Options &o) {
  const auto rc = RunConfigFor(o);
  const asd::Mode mode = asd::ParseMode(o.mode.value_or("individual"));
  const auto corpus = LoadCorpus(rc);
  const auto split = FoldOf(corpus, rc, o.fold);
  train::TrainLog log;
  const auto head = asd::TrainAsd(corpus, split, pipeline::AsdConfigFor(rc, mode, Stage(o.fold)), &log);
  const fs::path dir = OutDir(o);
  const std::string name = "asd_" + std::string(asd::ToString(mode));
  nn::SaveCheckpoint(dir / (name + ".ckpt"), head.ToCheckpoint());
  pipeline::WriteText(dir / (name + "_train_log.json"), log.ToJson());
  std::cout << nlohmann::json{{"checkpoint", (dir / (name + ".ckpt")).string()},
                              {"best_epoch", log.best_epoch},
                              {"val_f1", log.best_val_f1}}
                   .dump()
            << "\n";
  return 0;
}

pipeline::Models LoadModels(const fs::path &dir) {
  pipeline::Models m;
  const fs::path audio = dir / "audio.ckpt";
  if (!fs::exists(audio)) Fail(Errc::IoError, "missing " + audio.string());
  m.audio = audio::AudioHead::FromCheckpoint(nn::LoadCheckpoint(audio));
  for (const auto mode : {asd::Mode::kIndividual, asd::Mode::kCombined}) {
    const fs::path p = dir / ("asd_" + std::string(asd::ToString(mode)) + ".ckpt");
    if (!fs::exists(p)) continue;
    auto head = asd::AsdHead::FromCheckpoint(nn::LoadCheckpoint(p));
    if (head.config().mode != mode) {
      Fail(Errc::ModeMismatch, p.string() + " holds a " +
                                   std::string(asd::ToString(head.config().mode)) + " head");
    }
    (mode == asd::Mode::kIndividual ? m.individual : m.combined) = std::move(head);
  }
  return m;
}

int CmdClassify(const Options &o) {
  const auto rc = RunConfigFor(o);
  const auto corpus = LoadCorpus(rc);
  if (o.models.empty()) Fail(Errc::UsageError, "--models <dir> is required");
  const auto models = LoadModels(o.models);
  std::vector<std::string> sessions =
      o.classify_fold >= 0 ? FoldOf(corpus, rc, o.classify_fold).test : corpus.SessionIds();
  if (rc.two_face_source == fusion::TwoFaceSource::kCombined && models.combined) {
    bool any = false;
    for (const auto &sid : sessions) {
      const auto *s = corpus.FindSession(sid);
      for (const auto &u : s->utterances) {
        any = any || corpus::ClassifyVisualCondition(u, s->face_tracks).tag ==
                         corpus::ConditionTag::kTwoFaces;
      }
    }
    if (!any) {
      Fail(Errc::ModeDataMissing, "combined ASD head given but no TwoFaces utterances to score");
    }
  }
  const auto records =
      pipeline::ClassifySessions(corpus, models, sessions, rc.two_face_source, rc.threads);
  const fs::path path = OutDir(o) / "records.jsonl";
  std::string text;
  for (const auto &r : records) text += fusion::ToJsonLine(r) + "\n";
  pipeline::WriteText(path, text);
  std::cout << nlohmann::json{{"records", path.string()}, {"count", records.size()}}.dump()
            << "\n";
  return 0;
}

int CmdEvaluate(const Options &o) {
  const auto rc = RunConfigFor(o);
  const auto corpus = LoadCorpus(rc);
  if (o.records.empty()) Fail(Errc::UsageError, "--records <file> is required");
  const auto records = fusion::ReadRecords(o.records);
  if (records.empty()) Fail(Errc::EmptyInput, "no records in " + o.records);
  const std::string json = pipeline::ReportJson(records, corpus);
  const std::string text = pipeline::ReportText(records, corpus);
  const fs::path dir = OutDir(o);
  pipeline::WriteText(dir / "report.json", json);
  pipeline::WriteText(dir / "report.txt", text);
  std::cout << text;
  return 0;
}

int CmdCrossval(const Options &o) {
  const auto rc = RunConfigFor(o);
  const auto corpus = LoadCorpus(rc);
  const fs::path dir = OutDir(o);
  const auto result = pipeline::RunCrossval(corpus, rc, dir);
  std::cout << result.report_text;
  return 0;
}

void PrintError(std::string_view kind, std::string_view detail) {
  std::cerr << nlohmann::json{{"error", kind}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  ConfigureLogging();
  Options o;
  CLI::App app{"Child-adult speaker classification with audio-visual late fusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "diadfuse 0.1.0");

  auto common = [&](CLI::App *cmd, bool corpus) {
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Top-level seed (overrides config)");
    cmd->add_option("--threads", o.threads, "Worker threads (default: machine parallelism)");
    cmd->add_option("--out", o.out, "Output directory")->required();
    if (corpus) cmd->add_option("--corpus", o.corpus, "Corpus manifest (overrides config)");
  };
  auto mode = [&](CLI::App *cmd, const char *help) {
    cmd->add_option("--mode", o.mode, help)->check(CLI::IsMember({"individual", "combined"}));
  };

  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  common(synth_cmd, false);
  synth_cmd->add_option("--noise", o.noise, "Gaussian noise added to audio embeddings");

  auto *ta = app.add_subcommand("train-audio", "Train the audio head on one fold");
  common(ta, true);
  ta->add_option("--fold", o.fold, "Fold whose train/val sessions are used")->capture_default_str();

  auto *tv = app.add_subcommand("train-asd", "Train an ASD head on one fold");
  common(tv, true);
  mode(tv, "ASD input mode (default individual)");
  tv->add_option("--fold", o.fold, "Fold whose train/val sessions are used")->capture_default_str();

  auto *cl = app.add_subcommand("classify", "Score utterances into fusion records");
  common(cl, true);
  mode(cl, "Two-face ASD source");
  cl->add_option("--models", o.models, "Directory with audio.ckpt and asd_<mode>.ckpt")
      ->required();
  cl->add_option("--fold", o.classify_fold, "Score only this fold's test sessions; -1 scores all")
      ->capture_default_str();

  auto *ev = app.add_subcommand("evaluate", "Stratified F1 report over fusion records");
  common(ev, true);
  ev->add_option("--records", o.records, "records.jsonl")->required();

  auto *cv = app.add_subcommand("crossval", "Session-level k-fold cross-validation");
  common(cv, true);
  mode(cv, "Two-face ASD source");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    PrintError(ErrcName(Errc::UsageError), e.what());
    return 2;
  }

  try {
    if (*synth_cmd) return CmdSynth(o);
    if (*ta) return CmdTrainAudio(o);
    if (*tv) return CmdTrainAsd(o);
    if (*cl) return CmdClassify(o);
    if (*ev) return CmdEvaluate(o);
    if (*cv) return CmdCrossval(o);
  } catch (const Error &e) {
    PrintError(ErrcName(e.code()), e.detail());
    return 1;
  } catch (const std::exception &e) {
    PrintError("Internal", e.what());
    return 1;
  }
  return 2;
}
