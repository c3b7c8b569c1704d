// core/src/eval.cc

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

#include "diadfuse/eval.h"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "diadfuse/error.h"
#include "diadfuse/rng.h"

namespace diadfuse::eval {

using corpus::ConditionTag;
using corpus::LengthBin;
using nlohmann::json;

void Confusion::Merge(const Confusion &other) {
  for (int t = 0; t < 2; ++t) {
    for (int p = 0; p < 2; ++p) m_[t][p] += other.m_[t][p];
  }
}

std::size_t Confusion::Total() const { return m_[0][0] + m_[0][1] + m_[1][0] + m_[1][1]; }

F1Scores Confusion::Scores() const {
  if (Total() == 0) Fail(Errc::EmptyInput, "no predictions to score");
  F1Scores s;
  for (int c = 0; c < 2; ++c) {
    const std::size_t tp = m_[c][c];
    const std::size_t fn = m_[c][1 - c];
    const std::size_t fp = m_[1 - c][c];
    const std::size_t denom = 2 * tp + fp + fn;
    s.support[c] = tp + fn;
    if (denom == 0) {
      s.per_class[c] = 0.0;
      s.undefined[c] = true;
    } else {
      s.per_class[c] = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
  }
  s.macro = 0.5 * (s.per_class[0] + s.per_class[1]);
  return s;
}

F1Scores BinaryF1(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size()) {
    Fail(Errc::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                   std::to_string(truth.size()) + " labels");
  }
  if (preds.empty()) Fail(Errc::EmptyInput, "f1 of zero labels");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (truth[i] != 0 && truth[i] != 1)) {
      Fail(Errc::SchemaViolation, "binary labels must be 0 or 1");
    }
    c.Add(truth[i], preds[i]);
  }
  return c.Scores();
}

double F1Macro(std::span<const int> preds, std::span<const int> truth) {
  return BinaryF1(preds, truth).macro;
}

double F1Macro(std::span<const corpus::Speaker> preds, std::span<const corpus::Speaker> truth) {
  std::vector<int> p, t;
  p.reserve(preds.size());
  t.reserve(truth.size());
  for (auto s : preds) p.push_back(ClassIndex(s));
  for (auto s : truth) t.push_back(ClassIndex(s));
  return F1Macro(p, t);
}

std::vector<FoldSplit> SessionCvSplit(const std::vector<std::string> &session_ids, int k,
                                      std::uint64_t seed) {
  if (k < 3) Fail(Errc::InvalidConfig, "cross-validation needs k >= 3");
  if (session_ids.size() < static_cast<std::size_t>(k)) {
    Fail(Errc::TooFewSessions, std::to_string(session_ids.size()) + " sessions for " +
                                   std::to_string(k) + " folds");
  }
  std::vector<std::string> order = session_ids;
  Rng rng(seed);
  rng.Shuffle(order);

  const std::size_t n = order.size();
  const std::size_t ku = static_cast<std::size_t>(k);
  std::vector<std::vector<std::string>> folds(ku);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < ku; ++f) {
    // Larger folds are spread out so every train/val/test share stays within
    // one session of its target.
    const std::size_t r = n % ku;
    const std::size_t size = n / ku + ((f + 1) * r / ku - f * r / ku);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  std::vector<FoldSplit> splits;
  for (std::size_t f = 0; f < ku; ++f) {
    FoldSplit s;
    s.fold_index = static_cast<int>(f);
    s.test = folds[f];
    s.val = folds[(f + 1) % ku];
    for (std::size_t g = 0; g < ku; ++g) {
      if (g == f || g == (f + 1) % ku) continue;
      s.train.insert(s.train.end(), folds[g].begin(), folds[g].end());
    }
    splits.push_back(std::move(s));
  }
  return splits;
}

std::string_view ToString(System s) {
  switch (s) {
    case System::kAudio: return "audio";
    case System::kAsd: return "asd";
    case System::kFused: return "fused";
  }
  return "fused";
}

std::string_view ToString(TypeGroup g) {
  switch (g) {
    case TypeGroup::kSpeech: return "speech";
    case TypeGroup::kNonverbal: return "nonverbal";
    case TypeGroup::kOtherTypes: return "other_types";
  }
  return "other_types";
}

TypeGroup GroupOf(corpus::UttType t) {
  switch (t) {
    case corpus::UttType::kSpeech: return TypeGroup::kSpeech;
    case corpus::UttType::kNonverbalVocalization: return TypeGroup::kNonverbal;
    default: return TypeGroup::kOtherTypes;
  }
}

std::optional<double> Stratum::F1() const {
  if (confusion.Total() == 0) return std::nullopt;
  return confusion.Scores().macro;
}

std::optional<corpus::Speaker> Prediction(const fusion::FusionRecord &r, System system) {
  switch (system) {
    case System::kAudio: return fusion::AudioDecision(r.p_a);
    case System::kAsd:
      if (!r.p_asd) return std::nullopt;
      return fusion::AudioDecision(*r.p_asd);
    case System::kFused: return r.y_hat;
  }
  return std::nullopt;
}

MetricReport StratifiedReport(const std::vector<fusion::FusionRecord> &records,
                              const corpus::Corpus &corpus, System system) {
  if (records.empty()) Fail(Errc::EmptyInput, "no fusion records");
  std::unordered_map<std::string, const corpus::Utterance *> index;
  for (const auto &s : corpus.sessions) {
    for (const auto &u : s.utterances) index.emplace(u.id, &u);
  }
  MetricReport rep;
  rep.system = system;
  const ConditionTag headline[] = {ConditionTag::kZeroFace, ConditionTag::kOneFace,
                                   ConditionTag::kTwoFaces};
  const LengthBin bins[] = {LengthBin::kB1, LengthBin::kB2, LengthBin::kB3, LengthBin::kB4};
  const TypeGroup groups[] = {TypeGroup::kSpeech, TypeGroup::kNonverbal,
                              TypeGroup::kOtherTypes};
  for (auto c : headline) {
    rep.by_condition[c];
    for (auto b : bins) {
      rep.by_length[c][b];
      for (auto g : groups) rep.cells[c][b][g];
    }
    for (auto g : groups) rep.by_type[c][g];
  }

  Confusion overall;
  for (const auto &r : records) {
    auto it = index.find(r.utterance_id);
    if (it == index.end()) Fail(Errc::UnknownUtterance, r.utterance_id);
    if (r.excluded || r.condition.tag == ConditionTag::kOthers) {
      ++rep.excluded;
      continue;
    }
    const auto pred = Prediction(r, system);
    if (!pred) continue;
    const corpus::Utterance &u = *it->second;
    const int t = ClassIndex(r.y_true);
    const int p = ClassIndex(*pred);
    const auto bin = corpus::GetLengthBin(u);
    const auto group = GroupOf(u.type);
    overall.Add(t, p);
    rep.by_condition[r.condition.tag].confusion.Add(t, p);
    rep.by_length[r.condition.tag][bin].confusion.Add(t, p);
    rep.by_type[r.condition.tag][group].confusion.Add(t, p);
    rep.cells[r.condition.tag][bin][group].confusion.Add(t, p);
  }
  const F1Scores s = overall.Scores();
  rep.f1_macro = s.macro;
  rep.per_class_f1 = s.per_class;
  rep.support = s.support;
  rep.scored = overall.Total();
  return rep;
}

namespace {

json StratumJson(const Stratum &s) {
  json j;
  j["support"] = s.Support();
  const auto f1 = s.F1();
  j["f1_macro"] = f1 ? json(*f1) : json(nullptr);
  return j;
}

std::string Pct(const std::optional<double> &v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * *v);
  return buf;
}

std::string Cell(const std::string &text, int width) {
  if (static_cast<int>(text.size()) >= width) return text + " ";
  return std::string(static_cast<std::size_t>(width) - text.size(), ' ') + text;
}

std::string Label(const std::string &text, int width) {
  if (static_cast<int>(text.size()) >= width) return text + " ";
  return text + std::string(static_cast<std::size_t>(width) - text.size(), ' ');
}

std::string ConditionLabel(ConditionTag c) {
  switch (c) {
    case ConditionTag::kZeroFace: return "0-Face";
    case ConditionTag::kOneFace: return "1-Face";
    case ConditionTag::kTwoFaces: return "2-Faces";
    default: return "others";
  }
}

}  // namespace

std::string ReportToJson(const MetricReport &rep, int indent) {
  json j;
  j["system"] = ToString(rep.system);
  j["f1_macro"] = rep.f1_macro;
  j["per_class_f1"] = {{"child", rep.per_class_f1[0]}, {"adult", rep.per_class_f1[1]}};
  j["support"] = {{"child", rep.support[0]}, {"adult", rep.support[1]}};
  j["scored"] = rep.scored;
  j["excluded"] = rep.excluded;
  json cond = json::object(), len = json::object(), typ = json::object(), cells = json::object();
  for (const auto &[c, s] : rep.by_condition) cond[std::string(corpus::ToString(c))] = StratumJson(s);
  for (const auto &[c, m] : rep.by_length) {
    for (const auto &[b, s] : m) {
      len[std::string(corpus::ToString(c))][std::string(corpus::ToString(b))] = StratumJson(s);
    }
  }
  for (const auto &[c, m] : rep.by_type) {
    for (const auto &[g, s] : m) {
      typ[std::string(corpus::ToString(c))][std::string(ToString(g))] = StratumJson(s);
    }
  }
  for (const auto &[c, m] : rep.cells) {
    for (const auto &[b, mg] : m) {
      for (const auto &[g, s] : mg) {
        cells[std::string(corpus::ToString(c))][std::string(corpus::ToString(b))]
             [std::string(ToString(g))] = StratumJson(s);
      }
    }
  }
  j["by_condition"] = std::move(cond);
  j["by_length"] = std::move(len);
  j["by_type"] = std::move(typ);
  j["strata"] = std::move(cells);
  return j.dump(indent);
}

std::string FormatTables(const std::vector<MetricReport> &reports) {
  std::ostringstream os;
  const ConditionTag headline[] = {ConditionTag::kZeroFace, ConditionTag::kOneFace,
                                   ConditionTag::kTwoFaces};
  const LengthBin bins[] = {LengthBin::kB1, LengthBin::kB2, LengthBin::kB3, LengthBin::kB4};
  const TypeGroup groups[] = {TypeGroup::kSpeech, TypeGroup::kNonverbal,
                              TypeGroup::kOtherTypes};

  os << "F1 macro (%) overall and by visual condition\n";
  os << Label("system", 10) << Cell("overall", 9);
  for (auto c : headline) os << Cell(ConditionLabel(c), 9);
  os << Cell("n", 8) << '\n';
  for (const auto &r : reports) {
    os << Label(std::string(ToString(r.system)), 10) << Cell(Pct(r.f1_macro), 9);
    for (auto c : headline) os << Cell(Pct(r.by_condition.at(c).F1()), 9);
    os << Cell(std::to_string(r.scored), 8) << '\n';
  }

  os << "\nF1 macro (%) by utterance length (s)\n";
  os << Label("system", 10) << Label("visual", 9);
  for (auto b : bins) os << Cell(std::string(corpus::ToString(b)), 9);
  os << '\n';
  for (auto c : {ConditionTag::kOneFace, ConditionTag::kTwoFaces}) {
    for (const auto &r : reports) {
      os << Label(std::string(ToString(r.system)), 10) << Label(ConditionLabel(c), 9);
      for (auto b : bins) os << Cell(Pct(r.by_length.at(c).at(b).F1()), 9);
      os << '\n';
    }
  }

  os << "\nF1 macro (%) by utterance type\n";
  os << Label("system", 10) << Label("visual", 9);
  for (auto g : groups) os << Cell(std::string(ToString(g)), 13);
  os << '\n';
  for (auto c : {ConditionTag::kOneFace, ConditionTag::kTwoFaces}) {
    for (const auto &r : reports) {
      os << Label(std::string(ToString(r.system)), 10) << Label(ConditionLabel(c), 9);
      for (auto g : groups) os << Cell(Pct(r.by_type.at(c).at(g).F1()), 13);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace diadfuse::eval
