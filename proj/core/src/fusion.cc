// core/src/fusion.cc

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

#include "diadfuse/fusion.h"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "diadfuse/error.h"

namespace diadfuse::fusion {

using corpus::ConditionTag;
using corpus::Speaker;
using nlohmann::json;

ProbPair FuseOneFace(double p_spk, double p_im_child) {
  const double c = p_spk * p_im_child + (1.0 - p_spk) * (1.0 - p_im_child);
  return {c, 1.0 - c};
}

ProbPair FuseTwoFaces(double p_spk1, double p_spk2, double p_im1_child, double p_im2_child) {
  if (std::abs(p_spk1 + p_spk2 - 1.0) > 1e-6) {
    Fail(Errc::UnnormalizedSpeakerPair,
         "P_spk pair sums to " + std::to_string(p_spk1 + p_spk2));
  }
  return {p_im1_child * p_spk1 + p_im2_child * p_spk2,
          (1.0 - p_im1_child) * p_spk1 + (1.0 - p_im2_child) * p_spk2};
}

Speaker FuseFinal(const ProbPair &asd, const ProbPair &audio) {
  return asd.child * audio.child > asd.adult * audio.adult ? Speaker::kChild : Speaker::kAdult;
}

Speaker AudioDecision(const ProbPair &audio) {
  return audio.child > audio.adult ? Speaker::kChild : Speaker::kAdult;
}

std::string_view ToString(TwoFaceSource s) {
  return s == TwoFaceSource::kCombined ? "combined" : "individual";
}

TwoFaceSource ParseTwoFaceSource(std::string_view s) {
  if (s == "combined") return TwoFaceSource::kCombined;
  if (s == "individual") return TwoFaceSource::kIndividual;
  Fail(Errc::InvalidConfig, "two-face source must be individual|combined, got '" +
                                std::string(s) + "'");
}

FusionRecord ClassifyUtterance(const UtteranceEvidence &ev) {
  FusionRecord rec;
  rec.utterance_id = ev.utterance_id;
  rec.condition = ev.condition;
  rec.p_a = ev.p_a;
  rec.y_true = ev.y_true;
  switch (ev.condition.tag) {
    case ConditionTag::kZeroFace:
      rec.y_hat = AudioDecision(ev.p_a);
      break;
    case ConditionTag::kOthers:
      rec.y_hat = AudioDecision(ev.p_a);
      rec.excluded = true;
      break;
    case ConditionTag::kOneFace: {
      if (!ev.one_face) Fail(Errc::UsageError, ev.utterance_id + ": one-face evidence missing");
      const auto &one = *ev.one_face;
      rec.p_spk = {one.p_spk};
      rec.p_im = {one.prior};
      rec.p_asd = FuseOneFace(one.p_spk, one.prior.p_child);
      rec.y_hat = FuseFinal(*rec.p_asd, ev.p_a);
      break;
    }
    case ConditionTag::kTwoFaces: {
      if (!ev.two_faces) Fail(Errc::UsageError, ev.utterance_id + ": two-face evidence missing");
      const auto &two = *ev.two_faces;
      rec.p_spk = {two.p_spk1, two.p_spk2};
      rec.p_im = {two.prior1, two.prior2};
      rec.two_face_source = two.source;
      rec.degenerate = two.degenerate;
      rec.p_asd = FuseTwoFaces(two.p_spk1, two.p_spk2, two.prior1.p_child, two.prior2.p_child);
      rec.y_hat = FuseFinal(*rec.p_asd, ev.p_a);
      break;
    }
  }
  return rec;
}

std::string ToJsonLine(const FusionRecord &r) {
  json j;
  j["utterance_id"] = r.utterance_id;
  j["condition"] = corpus::ToString(r.condition.tag);
  j["child_track"] = r.condition.child_track ? json(*r.condition.child_track) : json(nullptr);
  j["adult_track"] = r.condition.adult_track ? json(*r.condition.adult_track) : json(nullptr);
  j["p_a"] = {r.p_a.child, r.p_a.adult};
  j["p_spk"] = r.p_spk;
  json priors = json::array();
  for (const auto &p : r.p_im) {
    priors.push_back({{"track", p.track_id}, {"p_child", p.p_child}, {"n_images", p.n_images}});
  }
  j["p_im"] = std::move(priors);
  j["p_asd"] = r.p_asd ? json{r.p_asd->child, r.p_asd->adult} : json(nullptr);
  j["two_face_source"] = r.two_face_source ? json(ToString(*r.two_face_source)) : json(nullptr);
  j["degenerate"] = r.degenerate;
  j["y_hat"] = corpus::ToString(r.y_hat);
  j["y_true"] = corpus::ToString(r.y_true);
  j["excluded"] = r.excluded;
  return j.dump();
}

FusionRecord FromJsonLine(std::string_view line) {
  try {
    const json j = json::parse(line);
    FusionRecord r;
    r.utterance_id = j.at("utterance_id").get<std::string>();
    r.condition.tag = corpus::ParseCondition(j.at("condition").get<std::string>());
    if (j.contains("child_track") && !j["child_track"].is_null()) {
      r.condition.child_track = j["child_track"].get<std::string>();
    }
    if (j.contains("adult_track") && !j["adult_track"].is_null()) {
      r.condition.adult_track = j["adult_track"].get<std::string>();
    }
    r.p_a = {j.at("p_a").at(0).get<double>(), j.at("p_a").at(1).get<double>()};
    r.p_spk = j.value("p_spk", std::vector<double>{});
    if (j.contains("p_im")) {
      for (const auto &p : j["p_im"]) {
        r.p_im.push_back({p.at("track").get<std::string>(), p.at("p_child").get<double>(),
                          p.at("n_images").get<std::size_t>()});
      }
    }
    if (j.contains("p_asd") && !j["p_asd"].is_null()) {
      r.p_asd = ProbPair{j["p_asd"].at(0).get<double>(), j["p_asd"].at(1).get<double>()};
    }
    if (j.contains("two_face_source") && !j["two_face_source"].is_null()) {
      r.two_face_source = ParseTwoFaceSource(j["two_face_source"].get<std::string>());
    }
    r.degenerate = j.value("degenerate", false);
    r.y_hat = corpus::ParseSpeaker(j.at("y_hat").get<std::string>());
    r.y_true = corpus::ParseSpeaker(j.at("y_true").get<std::string>());
    r.excluded = j.value("excluded", false);
    return r;
  } catch (const json::exception &e) {
    Fail(Errc::SchemaViolation, std::string("fusion record: ") + e.what());
  }
}

void WriteRecords(const std::filesystem::path &path, const std::vector<FusionRecord> &records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(Errc::IoError, "cannot write " + path.string());
  for (const auto &r : records) os << ToJsonLine(r) << '\n';
  if (!os) Fail(Errc::IoError, "failed writing " + path.string());
}

std::vector<FusionRecord> ReadRecords(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) Fail(Errc::IoError, "cannot open " + path.string());
  std::vector<FusionRecord> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(FromJsonLine(line));
  }
  return records;
}

}  // namespace diadfuse::fusion
