// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/serialize.hpp"

#include <cmath>
#include <fstream>

#include "ccdkit/error.hpp"

namespace ccdkit {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const ObjectMention& m) {
  j = {{"surface", m.surface},
       {"canonical_id", m.canonical_id},
       {"span", {m.begin, m.end}},
       {"label", std::string(label_name(m.label))}};
}

void from_json(const json& j, ObjectMention& m) {
  m.surface = j.at("surface").get<std::string>();
  m.canonical_id = j.at("canonical_id").get<std::string>();
  m.begin = j.at("span").at(0).get<std::size_t>();
  m.end = j.at("span").at(1).get<std::size_t>();
  m.label = parse_label(j.value("label", std::string("unknown")));
}

void to_json(json& j, const GenerationRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"top_logit", s.top_logit},
                     {"entropy", s.entropy},
                     {"image_attention_ratio", optional_json(s.image_attention_ratio)}});
  }
  json maps = json::array();
  for (const auto& a : r.attention_maps) maps.push_back(std::vector<double>(a.weights().begin(), a.weights().end()));
  j = {{"sample_id", r.sample_id},
       {"prompt", r.prompt},
       {"prompt_tokens", r.prompt_tokens},
       {"response_tokens", r.response_tokens},
       {"response_pieces", r.response_pieces},
       {"text", r.text()},
       {"ended_with_eos", r.ended_with_eos},
       {"steps", steps},
       {"attention_available", r.attention_available},
       {"attention_maps", maps},
       {"mentions", r.mentions}};
}

void from_json(const json& j, GenerationRecord& r) {
  r.sample_id = j.at("sample_id").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<std::vector<TokenId>>();
  r.response_tokens = j.at("response_tokens").get<std::vector<TokenId>>();
  r.response_pieces = j.at("response_pieces").get<std::vector<std::string>>();
  r.ended_with_eos = j.at("ended_with_eos").get<bool>();
  r.steps.clear();
  for (const auto& s : j.at("steps")) {
    r.steps.push_back({s.at("top_logit").get<double>(), s.at("entropy").get<double>(),
                       optional_from<double>(s, "image_attention_ratio")});
  }
  r.attention_available = j.at("attention_available").get<bool>();
  r.attention_maps.clear();
  for (const auto& a : j.at("attention_maps")) {
    r.attention_maps.push_back(AttentionMap::from_normalized(a.get<std::vector<double>>()));
  }
  r.mentions = j.at("mentions").get<std::vector<ObjectMention>>();
}

namespace induction {

void to_json(json& j, const EeResponse& r) {
  j = {{"direction", r.direction},
       {"imagination", r.imagination},
       {"reason", r.reason},
       {"raw_text", r.raw_text},
       {"parse_warning", r.parse_warning}};
}

void from_json(const json& j, EeResponse& r) {
  r.direction = j.at("direction").get<std::string>();
  r.imagination = j.at("imagination").get<std::set<std::string>>();
  r.reason = j.at("reason").get<std::set<std::string>>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.parse_warning = j.at("parse_warning").get<bool>();
}

void to_json(json& j, const Reference& r) {
  j = {{"mention", r.mention},
       {"attention", std::vector<double>(r.attention.weights().begin(), r.attention.weights().end())},
       {"continuation", r.continuation}};
}

void from_json(const json& j, Reference& r) {
  r.mention = j.at("mention").get<ObjectMention>();
  r.attention = AttentionMap::from_normalized(j.at("attention").get<std::vector<double>>());
  r.continuation = j.at("continuation").get<GenerationRecord>();
}

}  // namespace induction

namespace detection {

void to_json(json& j, const DetectionReport& r) {
  json mentions = json::array();
  for (const auto& m : r.mentions) {
    mentions.push_back({{"mention", m.mention},
                        {"poscore", m.poscore},
                        {"ig_score", optional_json(m.ig_score)},
                        {"ee_score", m.ee_score},
                        {"top_logit", m.baselines.top_logit},
                        {"logit_entropy", m.baselines.logit_entropy},
                        {"image_attn_ratio", optional_json(m.baselines.image_attn_ratio)}});
  }
  json prov = json::object();
  for (const auto& [id, p] : r.provenance) {
    prov[id] = {{"ig_similarity", optional_json(p.ig_similarity)},
                {"ee_count", optional_json(p.ee_count)},
                {"poscore", optional_json(p.poscore)}};
  }
  j = {{"sample_id", r.sample_id},
       {"reference", optional_json(r.reference)},
       {"mentions", mentions},
       {"ee_scores", r.ee_scores},
       {"s_ig", r.s_ig},
       {"s_ee", r.s_ee},
       {"s_induction", r.s_induction},
       {"provenance", prov}};
}

void from_json(const json& j, DetectionReport& r) {
  r.sample_id = j.at("sample_id").get<std::string>();
  r.reference = optional_from<std::string>(j, "reference");
  r.mentions.clear();
  for (const auto& m : j.at("mentions")) {
    MentionScores s;
    s.mention = m.at("mention").get<ObjectMention>();
    s.poscore = m.at("poscore").get<double>();
    s.ig_score = optional_from<double>(m, "ig_score");
    s.ee_score = m.at("ee_score").get<int>();
    s.baselines = {m.at("top_logit").get<double>(), m.at("logit_entropy").get<double>(),
                   optional_from<double>(m, "image_attn_ratio")};
    r.mentions.push_back(std::move(s));
  }
  r.ee_scores = j.at("ee_scores").get<std::map<std::string, int>>();
  r.s_ig = j.at("s_ig").get<std::set<std::string>>();
  r.s_ee = j.at("s_ee").get<std::set<std::string>>();
  r.s_induction = j.at("s_induction").get<std::set<std::string>>();
  r.provenance.clear();
  for (const auto& [id, p] : j.at("provenance").items()) {
    r.provenance[id] = {optional_from<double>(p, "ig_similarity"), optional_from<int>(p, "ee_count"),
                        optional_from<double>(p, "poscore")};
  }
}

void to_json(json& j, const DetectorMetrics& m) {
  j = {{"auroc", m.auroc},
       {"tpr_at_5fpr", m.tpr_at_5fpr},
       {"f1_max", m.f1_max},
       {"acc_at_f1max", m.acc_at_f1max},
       {"threshold", io::number_or_null(m.threshold)},
       {"positives", m.positives},
       {"negatives", m.negatives}};
}

}  // namespace detection

namespace cct {

void to_json(json& j, const CctSequence& s) {
  json slots = json::array();
  for (const auto& slot : s.slots) {
    slots.push_back({{"object", slot.object},
                     {"source", std::string(slot_source_name(slot.source))},
                     {"ig_similarity", optional_json(slot.ig_similarity)},
                     {"ee_count", optional_json(slot.ee_count)}});
  }
  j = {{"slots", slots}, {"text", s.text}, {"token_ids", s.token_ids}};
}

void from_json(const json& j, CctSequence& s) {
  s.slots.clear();
  for (const auto& slot : j.at("slots")) {
    s.slots.push_back({slot.at("object").get<std::string>(), parse_slot_source(slot.at("source").get<std::string>()),
                       optional_from<double>(slot, "ig_similarity"), optional_from<int>(slot, "ee_count")});
  }
  s.text = j.at("text").get<std::string>();
  s.token_ids = j.at("token_ids").get<std::vector<TokenId>>();
}

}  // namespace cct

namespace metrics {

void to_json(json& j, const ChairResult& r) {
  j = {{"chair_s", r.chair_s}, {"chair_i", r.chair_i}, {"precision", r.precision},
       {"recall", r.recall},   {"f1", r.f1},           {"len", r.len}};
}

void to_json(json& j, const AmberResult& r) {
  j = {{"chair", r.chair}, {"cover", r.cover}, {"hal", r.hal}, {"cog", optional_json(r.cog)}, {"warnings", r.warnings}};
}

}  // namespace metrics

namespace analysis {

void to_json(json& j, const PoscoreHistogram& h) {
  j = {{"bins", h.bins},
       {"hallucinated", h.hallucinated},
       {"grounded", h.grounded},
       {"hallucinated_count", h.hallucinated_count},
       {"grounded_count", h.grounded_count},
       {"hallucinated_mean", h.hallucinated_mean},
       {"grounded_mean", h.grounded_mean}};
}

void to_json(json& j, const RepetitionStats& s) {
  j = {{"k", s.k}, {"n", s.n}, {"r", s.r}};
}

}  // namespace analysis

namespace io {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kNotFound, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kInternal, "write failed for " + path.string());
}

}  // namespace io
}  // namespace ccdkit
