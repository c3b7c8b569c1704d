// core/src/pipeline.cc

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

#include "diadfuse/pipeline.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "diadfuse/error.h"
#include "diadfuse/face-prior.h"
#include "diadfuse/nn/checkpoint.h"
#include "diadfuse/rng.h"

namespace diadfuse::pipeline {

using nlohmann::json;

namespace {

void CheckKeys(const json &j, std::initializer_list<const char *> allowed, const std::string &where) {
  if (!j.is_object()) Fail(Errc::InvalidConfig, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto &[k, v] : j.items()) {
    if (ok.count(k) == 0) Fail(Errc::InvalidConfig, "unknown key " + where + "." + k);
  }
}

void ReadFit(const json &j, train::TrainConfig &fit) {
  fit.lr = j.value("lr", fit.lr);
  fit.batch_size = j.value("batch_size", fit.batch_size);
  fit.max_epochs = j.value("max_epochs", fit.max_epochs);
  fit.patience = j.value("patience", fit.patience);
}

json FitJson(const train::TrainConfig &fit) {
  return {{"lr", fit.lr},
          {"batch_size", fit.batch_size},
          {"max_epochs", fit.max_epochs},
          {"patience", fit.patience}};
}

}  // namespace

RunConfig RunConfigFromJson(const std::string &text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    CheckKeys(j, {"corpus", "seed", "threads", "audio", "asd", "fusion", "eval"}, "config");
    c.corpus = j.value("corpus", c.corpus);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("audio")) {
      const json &a = j.at("audio");
      CheckKeys(a, {"lr", "batch_size", "max_epochs", "patience", "conv_hidden", "mlp_hidden"},
                "audio");
      ReadFit(a, c.audio.fit);
      c.audio.arch.conv_hidden = a.value("conv_hidden", c.audio.arch.conv_hidden);
      c.audio.arch.mlp_hidden = a.value("mlp_hidden", c.audio.arch.mlp_hidden);
    }
    if (j.contains("asd")) {
      const json &a = j.at("asd");
      CheckKeys(a, {"lr", "batch_size", "max_epochs", "patience", "hidden"}, "asd");
      ReadFit(a, c.asd.fit);
      c.asd.arch.hidden = a.value("hidden", c.asd.arch.hidden);
    }
    if (j.contains("fusion")) {
      const json &f = j.at("fusion");
      CheckKeys(f, {"two_face_source"}, "fusion");
      if (f.contains("two_face_source")) {
        c.two_face_source = fusion::ParseTwoFaceSource(f.at("two_face_source").get<std::string>());
      }
    }
    if (j.contains("eval")) {
      const json &e = j.at("eval");
      CheckKeys(e, {"folds"}, "eval");
      c.folds = e.value("folds", c.folds);
    }
  } catch (const json::exception &e) {
    Fail(Errc::InvalidConfig, std::string("run config: ") + e.what());
  }
  if (c.threads < 1) Fail(Errc::InvalidConfig, "threads must be at least 1");
  if (c.folds < 3) Fail(Errc::InvalidConfig, "eval.folds must be at least 3");
  for (const auto *fit : {&c.audio.fit, &c.asd.fit}) {
    if (!(fit->lr > 0) || fit->batch_size < 1 || fit->max_epochs < 1 || fit->patience < 0) {
      Fail(Errc::InvalidConfig, "lr, batch_size and max_epochs must be positive");
    }
  }
  if (c.audio.arch.conv_hidden < 1 || c.audio.arch.mlp_hidden < 1 || c.asd.arch.hidden < 1) {
    Fail(Errc::InvalidConfig, "hidden sizes must be positive");
  }
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::IoError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return RunConfigFromJson(ss.str());
}

std::string ToJson(const RunConfig &c) {
  json audio = FitJson(c.audio.fit);
  audio["conv_hidden"] = c.audio.arch.conv_hidden;
  audio["mlp_hidden"] = c.audio.arch.mlp_hidden;
  json asd = FitJson(c.asd.fit);
  asd["hidden"] = c.asd.arch.hidden;
  json j{{"corpus", c.corpus},
         {"seed", c.seed},
         {"threads", c.threads},
         {"audio", audio},
         {"asd", asd},
         {"fusion", {{"two_face_source", fusion::ToString(c.two_face_source)}}},
         {"eval", {{"folds", c.folds}}}};
  return j.dump(1);
}

audio::AudioTrainConfig AudioConfigFor(const RunConfig &c, const std::string &stage) {
  audio::AudioTrainConfig out = c.audio;
  out.fit.seed = DeriveSeed(c.seed, stage + "/audio");
  out.fit.threads = c.threads;
  return out;
}

asd::AsdTrainConfig AsdConfigFor(const RunConfig &c, asd::Mode mode, const std::string &stage) {
  asd::AsdTrainConfig out = c.asd;
  out.arch.mode = mode;
  out.fit.seed = DeriveSeed(c.seed, stage + "/asd/" + std::string(asd::ToString(mode)));
  out.fit.threads = c.threads;
  return out;
}

namespace {

const asd::AsdHead &Need(const std::optional<asd::AsdHead> &head, asd::Mode mode) {
  if (!head) {
    Fail(Errc::ModeDataMissing,
         std::string("utterance needs the ") + std::string(asd::ToString(mode)) + " ASD head");
  }
  return *head;
}

fusion::FusionRecord ScoreUtterance(const corpus::Corpus &corpus, const corpus::Session &s,
                                    const corpus::Utterance &u, const Models &models,
                                    fusion::TwoFaceSource source) {
  fusion::UtteranceEvidence ev;
  ev.utterance_id = u.id;
  ev.y_true = u.speaker;
  ev.condition = corpus::ClassifyVisualCondition(u, s.face_tracks);
  ev.p_a = models.audio->Forward(audio::FeaturesFor(corpus, u));
  using corpus::ConditionTag;
  if (ev.condition.tag == ConditionTag::kOneFace) {
    const auto &track_id = ev.condition.child_track ? *ev.condition.child_track
                                                    : *ev.condition.adult_track;
    const corpus::FaceTrack *t = corpus.FindTrack(s, track_id);
    const auto &head = Need(models.individual, asd::Mode::kIndividual);
    fusion::OneFaceEvidence one;
    one.p_spk =
        head.ForwardIndividual(asd::MakeInput(corpus, u, {t}, asd::Mode::kIndividual)).p_spk;
    one.prior = face::TrackChildProb(*t);
    ev.one_face = one;
  } else if (ev.condition.tag == ConditionTag::kTwoFaces) {
    const corpus::FaceTrack *c = corpus.FindTrack(s, *ev.condition.child_track);
    const corpus::FaceTrack *a = corpus.FindTrack(s, *ev.condition.adult_track);
    fusion::TwoFaceEvidence two;
    two.source = source;
    two.prior1 = face::TrackChildProb(*c);
    two.prior2 = face::TrackChildProb(*a);
    if (source == fusion::TwoFaceSource::kCombined) {
      const auto &head = Need(models.combined, asd::Mode::kCombined);
      const auto out =
          head.ForwardCombined(asd::MakeInput(corpus, u, {c, a}, asd::Mode::kCombined));
      two.p_spk1 = out.p_spk1;
      two.p_spk2 = out.p_spk2;
    } else {
      const auto &head = Need(models.individual, asd::Mode::kIndividual);
      const double p1 =
          head.ForwardIndividual(asd::MakeInput(corpus, u, {c}, asd::Mode::kIndividual)).p_spk;
      const double p2 =
          head.ForwardIndividual(asd::MakeInput(corpus, u, {a}, asd::Mode::kIndividual)).p_spk;
      const asd::NormalizedPair n = asd::NormalizeIndividual(p1, p2);
      two.p_spk1 = n.p1;
      two.p_spk2 = n.p2;
      two.degenerate = n.degenerate;
    }
    ev.two_faces = two;
  }
  return fusion::ClassifyUtterance(ev);
}

}  // namespace

std::vector<fusion::FusionRecord> ClassifySessions(const corpus::Corpus &corpus,
                                                   const Models &models,
                                                   const std::vector<std::string> &session_ids,
                                                   fusion::TwoFaceSource source, int threads) {
  if (!models.audio) Fail(Errc::ModeDataMissing, "classification needs the audio head");
  std::vector<std::pair<const corpus::Session *, const corpus::Utterance *>> work;
  for (const auto &sid : session_ids) {
    const corpus::Session *s = corpus.FindSession(sid);
    if (s == nullptr) Fail(Errc::UnknownUtterance, "unknown session " + sid);
    for (const auto &u : s->utterances) work.emplace_back(s, &u);
  }
  std::vector<fusion::FusionRecord> out(work.size());
  train::ParallelFor(work.size(), threads, [&](std::size_t i) {
    out[i] = ScoreUtterance(corpus, *work[i].first, *work[i].second, models, source);
  });
  return out;
}

double CrossvalResult::Gain(corpus::ConditionTag tag) const {
  auto f1 = [&](eval::System s) {
    const auto &st = systems.at(s).pooled.by_condition.at(tag);
    return st.F1().value_or(std::numeric_limits<double>::quiet_NaN());
  };
  return f1(eval::System::kFused) - f1(eval::System::kAudio);
}

namespace {

constexpr eval::System kSystems[] = {eval::System::kAudio, eval::System::kAsd,
                                     eval::System::kFused};

double FoldF1(const std::vector<fusion::FusionRecord> &records, const corpus::Corpus &corpus,
              eval::System system) {
  try {
    return eval::StratifiedReport(records, corpus, system).f1_macro;
  } catch (const Error &e) {
    if (e.code() != Errc::EmptyInput) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

json NumberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

bool NeedsHead(const corpus::Corpus &corpus, const std::vector<std::string> &ids,
               corpus::ConditionTag tag) {
  for (const auto &sid : ids) {
    const corpus::Session *s = corpus.FindSession(sid);
    for (const auto &u : s->utterances) {
      const auto c = corpus::ClassifyVisualCondition(u, s->face_tracks);
      if (c.tag == tag) return true;
    }
  }
  return false;
}

}  // namespace

std::string ReportJson(const std::vector<fusion::FusionRecord> &records,
                       const corpus::Corpus &corpus) {
  json j;
  for (auto s : kSystems) {
    try {
      j[std::string(eval::ToString(s))] = json::parse(eval::ReportToJson(
          eval::StratifiedReport(records, corpus, s)));
    } catch (const Error &e) {
      if (e.code() != Errc::EmptyInput || s == eval::System::kFused) throw;
      j[std::string(eval::ToString(s))] = nullptr;
    }
  }
  return j.dump(1);
}

std::string ReportText(const std::vector<fusion::FusionRecord> &records,
                       const corpus::Corpus &corpus) {
  std::vector<eval::MetricReport> reps;
  for (auto s : kSystems) {
    try {
      reps.push_back(eval::StratifiedReport(records, corpus, s));
    } catch (const Error &e) {
      if (e.code() != Errc::EmptyInput || s == eval::System::kFused) throw;
    }
  }
  return eval::FormatTables(reps);
}

void WriteText(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) Fail(Errc::IoError, "cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CrossvalResult RunCrossval(const corpus::Corpus &corpus, const RunConfig &config,
                           const std::optional<std::filesystem::path> &out_dir) {
  const auto splits =
      eval::SessionCvSplit(corpus.SessionIds(), config.folds, DeriveSeed(config.seed, "cv"));
  CrossvalResult result;
  std::map<eval::System, std::vector<double>> fold_f1;
  json folds = json::array();
  for (const auto &split : splits) {
    const std::string stage = fmt::format("fold{}", split.fold_index);
    spdlog::info("{}: {} train / {} val / {} test sessions", stage, split.train.size(),
                 split.val.size(), split.test.size());
    Models models;
    json logs;
    train::TrainLog log;
    models.audio = audio::TrainAudio(corpus, split, AudioConfigFor(config, stage), &log);
    logs["audio"] = json::parse(log.ToJson());
    if (NeedsHead(corpus, split.test, corpus::ConditionTag::kOneFace) ||
        config.two_face_source == fusion::TwoFaceSource::kIndividual) {
      models.individual = asd::TrainAsd(
          corpus, split, AsdConfigFor(config, asd::Mode::kIndividual, stage), &log);
      logs["asd_individual"] = json::parse(log.ToJson());
    }
    if (config.two_face_source == fusion::TwoFaceSource::kCombined &&
        NeedsHead(corpus, split.test, corpus::ConditionTag::kTwoFaces)) {
      models.combined =
          asd::TrainAsd(corpus, split, AsdConfigFor(config, asd::Mode::kCombined, stage), &log);
      logs["asd_combined"] = json::parse(log.ToJson());
    }
    auto records =
        ClassifySessions(corpus, models, split.test, config.two_face_source, config.threads);
    json fold{{"fold", split.fold_index}, {"test_sessions", split.test}};
    for (auto s : kSystems) {
      const double f = FoldF1(records, corpus, s);
      fold_f1[s].push_back(f);
      fold["f1_macro"][std::string(eval::ToString(s))] = NumberOrNull(f);
    }
    folds.push_back(fold);
    if (out_dir) {
      const auto dir = *out_dir / stage;
      std::filesystem::create_directories(dir);
      nn::SaveCheckpoint(dir / "audio.ckpt", models.audio->ToCheckpoint());
      if (models.individual) {
        nn::SaveCheckpoint(dir / "asd_individual.ckpt", models.individual->ToCheckpoint());
      }
      if (models.combined) {
        nn::SaveCheckpoint(dir / "asd_combined.ckpt", models.combined->ToCheckpoint());
      }
      WriteText(dir / "train_log.json", logs.dump(1));
    }
    result.records.insert(result.records.end(), std::make_move_iterator(records.begin()),
                          std::make_move_iterator(records.end()));
  }

  json report;
  report["config"] = json::parse(ToJson(config));
  report["config"].erase("threads");  // results do not depend on it
  report["folds"] = folds;
  for (auto s : kSystems) {
    SystemSummary sum;
    sum.pooled = eval::StratifiedReport(result.records, corpus, s);
    sum.fold_f1 = fold_f1[s];
    double total = 0.0, n = 0.0;
    for (double f : sum.fold_f1) {
      if (std::isfinite(f)) total += f, n += 1.0;
    }
    sum.fold_mean = n > 0 ? total / n : std::numeric_limits<double>::quiet_NaN();
    double var = 0.0;
    for (double f : sum.fold_f1) {
      if (std::isfinite(f)) var += (f - sum.fold_mean) * (f - sum.fold_mean);
    }
    sum.fold_std = n > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    const std::string key(eval::ToString(s));
    report["pooled"][key] = json::parse(eval::ReportToJson(sum.pooled));
    report["fold_summary"][key] = {{"mean", NumberOrNull(sum.fold_mean)},
                                   {"std", NumberOrNull(sum.fold_std)}};
    result.systems.emplace(s, std::move(sum));
  }
  result.report_json = report.dump(1);
  std::vector<eval::MetricReport> reps;
  std::string summary = "Cross-validation F1-macro per fold (mean +- std)\n";
  for (auto s : kSystems) {
    const auto &sum = result.systems.at(s);
    reps.push_back(sum.pooled);
    summary += fmt::format("  {:<6} {:.4f} +- {:.4f}\n", eval::ToString(s), sum.fold_mean,
                           sum.fold_std);
  }
  result.report_text = eval::FormatTables(reps) + "\n" + summary;
  if (out_dir) {
    fusion::WriteRecords(*out_dir / "records.jsonl", result.records);
    WriteText(*out_dir / "report.json", result.report_json);
    WriteText(*out_dir / "report.txt", result.report_text);
  }
  return result;
}

}  // namespace diadfuse::pipeline
