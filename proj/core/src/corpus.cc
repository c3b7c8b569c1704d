// core/src/corpus.cc

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

#include "diadfuse/corpus.h"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "diadfuse/dfem.h"
#include "diadfuse/error.h"

namespace diadfuse::corpus {

using nlohmann::json;

std::string_view ToString(Speaker s) {
  return s == Speaker::kChild ? "child" : "adult";
}

std::string_view ToString(UttType t) {
  switch (t) {
    case UttType::kSpeech: return "speech";
    case UttType::kNonverbalVocalization: return "nonverbal";
    case UttType::kUnintelligible: return "unintelligible";
    case UttType::kSinging: return "singing";
  }
  return "speech";
}

std::string_view ToString(Identity i) {
  switch (i) {
    case Identity::kChild: return "child";
    case Identity::kAdult: return "adult";
    case Identity::kThirdPerson: return "third_person";
    case Identity::kUnclear: return "unclear";
  }
  return "unclear";
}

std::string_view ToString(ConditionTag c) {
  switch (c) {
    case ConditionTag::kZeroFace: return "zero_face";
    case ConditionTag::kOneFace: return "one_face";
    case ConditionTag::kTwoFaces: return "two_faces";
    case ConditionTag::kOthers: return "others";
  }
  return "others";
}

std::string_view ToString(LengthBin b) {
  switch (b) {
    case LengthBin::kB1: return "0.3-0.6";
    case LengthBin::kB2: return "0.6-1";
    case LengthBin::kB3: return "1-2";
    case LengthBin::kB4: return "2-3";
  }
  return "2-3";
}

Speaker ParseSpeaker(std::string_view s) {
  if (s == "child") return Speaker::kChild;
  if (s == "adult") return Speaker::kAdult;
  Fail(Errc::SchemaViolation, "speaker: unknown value '" + std::string(s) + "'");
}

UttType ParseUttType(std::string_view s) {
  if (s == "speech") return UttType::kSpeech;
  if (s == "nonverbal") return UttType::kNonverbalVocalization;
  if (s == "unintelligible") return UttType::kUnintelligible;
  if (s == "singing") return UttType::kSinging;
  Fail(Errc::SchemaViolation, "type: unknown value '" + std::string(s) + "'");
}

Identity ParseIdentity(std::string_view s) {
  if (s == "child") return Identity::kChild;
  if (s == "adult") return Identity::kAdult;
  if (s == "third_person") return Identity::kThirdPerson;
  if (s == "unclear") return Identity::kUnclear;
  Fail(Errc::SchemaViolation, "identity: unknown value '" + std::string(s) + "'");
}

ConditionTag ParseCondition(std::string_view s) {
  if (s == "zero_face") return ConditionTag::kZeroFace;
  if (s == "one_face") return ConditionTag::kOneFace;
  if (s == "two_faces") return ConditionTag::kTwoFaces;
  if (s == "others") return ConditionTag::kOthers;
  Fail(Errc::SchemaViolation, "condition: unknown value '" + std::string(s) + "'");
}

std::int64_t ToMs(double seconds) { return std::llround(seconds * 1000.0); }

const nn::Tensor2 &Corpus::Embedding(const std::string &key) const {
  auto it = embeddings.find(key);
  if (it == embeddings.end()) Fail(Errc::MissingEmbedding, key);
  return *it->second;
}

const Session *Corpus::FindSession(std::string_view id) const {
  for (const auto &s : sessions) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const FaceTrack *Corpus::FindTrack(const Session &session, std::string_view track_id) const {
  for (const auto &t : session.face_tracks) {
    if (t.id == track_id) return &t;
  }
  return nullptr;
}

std::size_t Corpus::UtteranceCount() const {
  std::size_t n = 0;
  for (const auto &s : sessions) n += s.utterances.size();
  return n;
}

std::vector<std::string> Corpus::SessionIds() const {
  std::vector<std::string> ids;
  ids.reserve(sessions.size());
  for (const auto &s : sessions) ids.push_back(s.id);
  return ids;
}

int Corpus::AudioVideoRatio() const {
  const double ratio = audio_frame_rate / video_frame_rate;
  const long r = std::lround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9) {
    Fail(Errc::AlignmentError, "audio frame rate " + std::to_string(audio_frame_rate) +
                                   " is not an integer multiple of video frame rate " +
                                   std::to_string(video_frame_rate));
  }
  return static_cast<int>(r);
}

namespace {

template <class T>
T Field(const json &obj, const char *name, const std::string &where) {
  auto it = obj.find(name);
  if (it == obj.end()) Fail(Errc::SchemaViolation, where + "." + name + ": missing");
  try {
    return it->get<T>();
  } catch (const json::exception &e) {
    Fail(Errc::SchemaViolation, where + "." + name + ": " + e.what());
  }
}

template <class T>
T FieldOr(const json &obj, const char *name, T fallback, const std::string &where) {
  if (!obj.contains(name)) return fallback;
  return Field<T>(obj, name, where);
}

bool RowsMatch(Eigen::Index rows, double seconds, double rate) {
  const long expected = std::lround(seconds * rate);
  return std::abs(static_cast<long>(rows) - expected) <= 1;
}

void CheckDistribution(const BracketDist &d, const std::string &where) {
  double sum = 0.0;
  for (double v : d) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      Fail(Errc::SchemaViolation, where + ": bracket probabilities must be non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    Fail(Errc::SchemaViolation, where + ": bracket distribution sums to " + std::to_string(sum));
  }
}

}  // namespace

void Validate(const Corpus &corpus) {
  if (corpus.audio_layers < 1) Fail(Errc::SchemaViolation, "audio_layers must be >= 1");
  if (!(corpus.audio_frame_rate > 0.0) || !(corpus.video_frame_rate > 0.0)) {
    Fail(Errc::SchemaViolation, "frame rates must be positive");
  }
  std::set<std::string> session_ids, utt_ids, track_ids;
  Eigen::Index audio_cols = -1, visual_cols = -1;
  for (const auto &s : corpus.sessions) {
    if (!session_ids.insert(s.id).second) {
      Fail(Errc::SchemaViolation, "duplicate session id '" + s.id + "'");
    }
    for (const auto &u : s.utterances) {
      const std::string where = "utterance '" + u.id + "'";
      if (!utt_ids.insert(u.id).second) Fail(Errc::SchemaViolation, "duplicate " + where);
      if (u.session_id != s.id) Fail(Errc::SchemaViolation, where + ": session_id mismatch");
      if (u.t_start < 0.0) Fail(Errc::SchemaViolation, where + ": negative t_start");
      if (ToMs(u.t_end) <= ToMs(u.t_start)) Fail(Errc::TimestampOrder, u.id);
      auto it = corpus.embeddings.find(u.audio_ref);
      if (it == corpus.embeddings.end()) Fail(Errc::MissingEmbedding, u.audio_ref);
      const auto &emb = *it->second;
      if (emb.cols() % corpus.audio_layers != 0) {
        Fail(Errc::SchemaViolation, where + ": audio width not divisible by audio_layers");
      }
      if (audio_cols >= 0 && emb.cols() != audio_cols) {
        Fail(Errc::SchemaViolation, where + ": inconsistent audio embedding width");
      }
      audio_cols = emb.cols();
      if (!RowsMatch(emb.rows(), u.Duration(), corpus.audio_frame_rate)) {
        Fail(Errc::SchemaViolation, where + ": audio rows " + std::to_string(emb.rows()) +
                                        " do not match duration");
      }
    }
    for (const auto &t : s.face_tracks) {
      const std::string where = "face track '" + t.id + "'";
      if (!track_ids.insert(t.id).second) Fail(Errc::SchemaViolation, "duplicate " + where);
      if (t.session_id != s.id) Fail(Errc::SchemaViolation, where + ": session_id mismatch");
      if (ToMs(t.tau_end) <= ToMs(t.tau_start)) Fail(Errc::TimestampOrder, t.id);
      if (!(t.frame_rate > 0.0)) Fail(Errc::SchemaViolation, where + ": frame_rate");
      for (std::size_t i = 0; i < t.bracket_dists.size(); ++i) {
        CheckDistribution(t.bracket_dists[i], where + " image " + std::to_string(i));
      }
      auto it = corpus.embeddings.find(t.visual_ref);
      if (it == corpus.embeddings.end()) Fail(Errc::MissingEmbedding, t.visual_ref);
      const auto &emb = *it->second;
      if (visual_cols >= 0 && emb.cols() != visual_cols) {
        Fail(Errc::SchemaViolation, where + ": inconsistent visual embedding width");
      }
      visual_cols = emb.cols();
      const double dur = static_cast<double>(ToMs(t.tau_end) - ToMs(t.tau_start)) / 1000.0;
      if (!RowsMatch(emb.rows(), dur, t.frame_rate)) {
        Fail(Errc::SchemaViolation, where + ": visual rows do not match duration");
      }
    }
  }
}

Corpus LoadManifest(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) Fail(Errc::IoError, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception &e) {
    Fail(Errc::SchemaViolation, std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) Fail(Errc::SchemaViolation, "manifest: not an object");

  Corpus corpus;
  const std::string root = "manifest";
  corpus.audio_layers = FieldOr<int>(doc, "audio_layers", 1, root);
  corpus.audio_frame_rate = FieldOr<double>(doc, "audio_frame_rate", 50.0, root);
  corpus.video_frame_rate = FieldOr<double>(doc, "video_frame_rate", kDefaultVideoFps, root);
  const auto emb_dir = path.parent_path() /
                       FieldOr<std::string>(doc, "embedding_dir", "embeddings", root);

  const json sessions = Field<json>(doc, "sessions", root);
  if (!sessions.is_array()) Fail(Errc::SchemaViolation, "manifest.sessions: not an array");

  auto load_embedding = [&](const std::string &key) {
    if (corpus.embeddings.count(key) != 0) return;
    const auto file = emb_dir / (key + ".dfem");
    if (!std::filesystem::exists(file)) Fail(Errc::MissingEmbedding, key);
    corpus.embeddings[key] = std::make_shared<const nn::Tensor2>(dfem::ReadFile(file));
  };

  for (std::size_t si = 0; si < sessions.size(); ++si) {
    const json &js = sessions[si];
    const std::string where = "sessions[" + std::to_string(si) + "]";
    Session session;
    session.id = Field<std::string>(js, "id", where);
    if (js.contains("metadata")) session.metadata_json = js["metadata"].dump();

    for (const json &ju : FieldOr<json>(js, "utterances", json::array(), where)) {
      Utterance u;
      const std::string uw = where + ".utterance";
      u.id = Field<std::string>(ju, "id", uw);
      u.session_id = FieldOr<std::string>(ju, "session_id", session.id, uw);
      u.t_start = Field<double>(ju, "t_start", uw);
      u.t_end = Field<double>(ju, "t_end", uw);
      if (ToMs(u.t_end) <= ToMs(u.t_start)) Fail(Errc::TimestampOrder, u.id);
      u.speaker = ParseSpeaker(Field<std::string>(ju, "speaker", uw));
      u.type = ParseUttType(FieldOr<std::string>(ju, "type", "speech", uw));
      u.audio_ref = Field<std::string>(ju, "audio_embedding_ref", uw);
      load_embedding(u.audio_ref);
      session.utterances.push_back(std::move(u));
    }
    for (const json &jt : FieldOr<json>(js, "face_tracks", json::array(), where)) {
      FaceTrack t;
      const std::string tw = where + ".face_track";
      t.id = Field<std::string>(jt, "id", tw);
      t.session_id = FieldOr<std::string>(jt, "session_id", session.id, tw);
      t.tau_start = Field<double>(jt, "tau_start", tw);
      t.tau_end = Field<double>(jt, "tau_end", tw);
      t.identity = ParseIdentity(Field<std::string>(jt, "identity", tw));
      t.frame_rate = FieldOr<double>(jt, "frame_rate", corpus.video_frame_rate, tw);
      t.visual_ref = Field<std::string>(jt, "visual_embedding_ref", tw);
      for (const json &jd : FieldOr<json>(jt, "bracket_dists", json::array(), tw)) {
        if (!jd.is_array() || jd.size() != kBracketCount) {
          Fail(Errc::SchemaViolation, tw + " '" + t.id + "': bracket_dists entries need 9 values");
        }
        BracketDist d{};
        for (int k = 0; k < kBracketCount; ++k) d[k] = jd[k].get<double>();
        t.bracket_dists.push_back(d);
      }
      load_embedding(t.visual_ref);
      session.face_tracks.push_back(std::move(t));
    }
    corpus.sessions.push_back(std::move(session));
  }
  Validate(corpus);
  return corpus;
}

std::filesystem::path WriteCorpus(const Corpus &corpus, const std::filesystem::path &dir,
                                  const std::string &embedding_dir) {
  std::filesystem::create_directories(dir / embedding_dir);
  json doc;
  doc["format"] = "diadfuse-manifest";
  doc["version"] = 1;
  doc["embedding_dir"] = embedding_dir;
  doc["audio_layers"] = corpus.audio_layers;
  doc["audio_frame_rate"] = corpus.audio_frame_rate;
  doc["video_frame_rate"] = corpus.video_frame_rate;
  json sessions = json::array();
  for (const auto &s : corpus.sessions) {
    json js;
    js["id"] = s.id;
    js["metadata"] = json::parse(s.metadata_json);
    json utts = json::array();
    for (const auto &u : s.utterances) {
      utts.push_back({{"id", u.id},
                      {"t_start", u.t_start},
                      {"t_end", u.t_end},
                      {"speaker", ToString(u.speaker)},
                      {"type", ToString(u.type)},
                      {"audio_embedding_ref", u.audio_ref}});
    }
    js["utterances"] = std::move(utts);
    json tracks = json::array();
    for (const auto &t : s.face_tracks) {
      json dists = json::array();
      for (const auto &d : t.bracket_dists) dists.push_back(d);
      tracks.push_back({{"id", t.id},
                        {"tau_start", t.tau_start},
                        {"tau_end", t.tau_end},
                        {"identity", ToString(t.identity)},
                        {"frame_rate", t.frame_rate},
                        {"visual_embedding_ref", t.visual_ref},
                        {"bracket_dists", std::move(dists)}});
    }
    js["face_tracks"] = std::move(tracks);
    sessions.push_back(std::move(js));
  }
  doc["sessions"] = std::move(sessions);

  for (const auto &[key, emb] : corpus.embeddings) {
    dfem::WriteFile(dir / embedding_dir / (key + ".dfem"), *emb, dfem::Dtype::kF32);
  }
  const auto manifest = dir / "manifest.json";
  std::ofstream os(manifest, std::ios::trunc);
  if (!os) Fail(Errc::IoError, "cannot write " + manifest.string());
  os << doc.dump(1) << '\n';
  return manifest;
}

bool TrackCovers(const FaceTrack &track, const Utterance &utt) {
  return ToMs(track.tau_start) <= ToMs(utt.t_start) && ToMs(utt.t_end) <= ToMs(track.tau_end);
}

VisualCondition ClassifyVisualCondition(const Utterance &utt,
                                        const std::vector<FaceTrack> &tracks) {
  VisualCondition vc;
  int children = 0, adults = 0, others = 0;
  for (const auto &t : tracks) {
    if (t.session_id != utt.session_id || !TrackCovers(t, utt)) continue;
    switch (t.identity) {
      case Identity::kChild:
        ++children;
        vc.child_track = t.id;
        break;
      case Identity::kAdult:
        ++adults;
        vc.adult_track = t.id;
        break;
      default:
        ++others;
    }
  }
  if (others > 0 || children > 1 || adults > 1) {
    vc.tag = ConditionTag::kOthers;
    vc.child_track.reset();
    vc.adult_track.reset();
  } else if (children == 1 && adults == 1) {
    vc.tag = ConditionTag::kTwoFaces;
  } else if (children + adults == 1) {
    vc.tag = ConditionTag::kOneFace;
  } else {
    vc.tag = ConditionTag::kZeroFace;
  }
  return vc;
}

Corpus Preprocess(const Corpus &corpus) {
  Corpus out;
  out.audio_layers = corpus.audio_layers;
  out.audio_frame_rate = corpus.audio_frame_rate;
  out.video_frame_rate = corpus.video_frame_rate;
  const auto max_rows = static_cast<Eigen::Index>(
      std::lround(static_cast<double>(kMaxDurationMs) / 1000.0 * corpus.audio_frame_rate));
  for (const auto &s : corpus.sessions) {
    Session ns;
    ns.id = s.id;
    ns.metadata_json = s.metadata_json;
    ns.face_tracks = s.face_tracks;
    for (const auto &t : s.face_tracks) out.embeddings[t.visual_ref] = corpus.embeddings.at(t.visual_ref);
    for (const auto &u : s.utterances) {
      if (u.DurationMs() <= kMinDurationMs) continue;
      Utterance nu = u;
      EmbeddingPtr emb = corpus.embeddings.at(u.audio_ref);
      if (u.DurationMs() > kMaxDurationMs) {
        nu.t_end = static_cast<double>(ToMs(u.t_start) + kMaxDurationMs) / 1000.0;
        if (emb->rows() > max_rows) {
          emb = std::make_shared<const nn::Tensor2>(emb->topRows(max_rows));
        }
      }
      out.embeddings[nu.audio_ref] = emb;
      ns.utterances.push_back(std::move(nu));
    }
    out.sessions.push_back(std::move(ns));
  }
  return out;
}

LengthBin GetLengthBin(const Utterance &utt) {
  const std::int64_t ms = utt.DurationMs();
  if (ms < kMinDurationMs || ms > kMaxDurationMs) {
    Fail(Errc::DurationOutOfRange, utt.id + ": " + std::to_string(ms) + " ms");
  }
  if (ms < 600) return LengthBin::kB1;
  if (ms < 1000) return LengthBin::kB2;
  if (ms < 2000) return LengthBin::kB3;
  return LengthBin::kB4;
}

std::map<ConditionTag, std::size_t> ConditionCounts(const Corpus &corpus) {
  std::map<ConditionTag, std::size_t> counts{{ConditionTag::kZeroFace, 0},
                                             {ConditionTag::kOneFace, 0},
                                             {ConditionTag::kTwoFaces, 0},
                                             {ConditionTag::kOthers, 0}};
  for (const auto &s : corpus.sessions) {
    for (const auto &u : s.utterances) ++counts[ClassifyVisualCondition(u, s.face_tracks).tag];
  }
  return counts;
}

}  // namespace diadfuse::corpus
