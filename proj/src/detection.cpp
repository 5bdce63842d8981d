// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccdkit/error.hpp"

namespace ccdkit::detection {

const std::vector<ModelProfile>& model_profiles() {
  static const std::vector<ModelProfile> profiles = {
      {"llava-v1.5-7b", 0.75, 1, 10, " "},
      {"minigpt-4", 0.75, 0, 10, ", "},
      {"qwen-vl-chat", 0.85, 0, 5, " "},
      {"qwen2-vl-7b", 0.75, 1, 5, " "},
      {"janus-pro-7b", 0.75, 1, 5, " "},
  };
  return profiles;
}

const ModelProfile& profile(std::string_view name) {
  for (const auto& p : model_profiles()) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::kNotFound, "unknown model profile '" + std::string(name) + "'");
}

void DetectionConfig::validate() const {
  if (!(theta_ig >= 0.0 && theta_ig <= 1.0)) throw Error(ErrorKind::kParameter, "theta_ig must lie in [0, 1]");
}

namespace {

void check_span(const ObjectMention& mention, const GenerationRecord& record) {
  if (mention.begin >= mention.end || mention.end > record.length()) {
    throw Error(ErrorKind::kValidation, "mention '" + mention.surface + "' span outside the response");
  }
}

}  // namespace

double poscore(const ObjectMention& mention, const GenerationRecord& record) {
  if (record.length() == 0) throw Error(ErrorKind::kDomain, "poscore of an empty response");
  check_span(mention, record);
  return static_cast<double>(mention.begin + 1) / static_cast<double>(record.length());
}

AttentionMap mention_attention(const ObjectMention& mention, const GenerationRecord& record) {
  if (!record.attention_available || record.attention_maps.size() != record.length()) {
    throw Error(ErrorKind::kCapability, "record '" + record.sample_id + "' carries no attention maps");
  }
  check_span(mention, record);
  std::vector<double> mean(record.attention_maps[mention.begin].size(), 0.0);
  for (std::size_t t = mention.begin; t < mention.end; ++t) {
    const auto w = record.attention_maps[t].weights();
    if (w.size() != mean.size()) throw Error(ErrorKind::kDimension, "attention maps differ in length");
    for (std::size_t i = 0; i < w.size(); ++i) mean[i] += w[i];
  }
  return AttentionMap::normalize(mean);
}

double ig_score(const ObjectMention& mention, const AttentionMap& reference, const GenerationRecord& record) {
  return cosine_similarity(mention_attention(mention, record), reference);
}

int ee_score(const std::string& canonical_id, std::span<const induction::EeResponse> responses) {
  int score = 0;
  for (const auto& r : responses) {
    score += static_cast<int>(r.imagination.count(canonical_id)) - static_cast<int>(r.reason.count(canonical_id));
  }
  return score;
}

BaselineScores baseline_scores(const ObjectMention& mention, const GenerationRecord& record) {
  check_span(mention, record);
  if (record.steps.size() != record.length()) {
    throw Error(ErrorKind::kCapability, "record '" + record.sample_id + "' lacks per-step statistics");
  }
  const StepStats& s = record.steps[mention.begin];
  return {s.top_logit, s.entropy, s.image_attention_ratio};
}

DetectionReport score_sample(const GenerationRecord& record, const std::optional<induction::Reference>& reference,
                             std::span<const induction::EeResponse> ee_responses) {
  DetectionReport report;
  report.sample_id = record.sample_id;
  if (reference) report.reference = reference->mention.canonical_id;
  for (const auto& m : record.mentions) {
    MentionScores s;
    s.mention = m;
    s.poscore = poscore(m, record);
    if (reference) s.ig_score = ig_score(m, reference->attention, record);
    s.ee_score = ee_score(m.canonical_id, ee_responses);
    s.baselines = baseline_scores(m, record);
    report.ee_scores[m.canonical_id] = s.ee_score;
    report.mentions.push_back(std::move(s));
  }
  for (const auto& r : ee_responses) {
    for (const auto* set : {&r.imagination, &r.reason}) {
      for (const auto& id : *set) report.ee_scores[id] = ee_score(id, ee_responses);
    }
  }
  return report;
}

DetectionReport select_candidates(DetectionReport report, const DetectionConfig& cfg) {
  cfg.validate();
  report.s_ig.clear();
  report.s_ee.clear();
  report.s_induction.clear();
  report.provenance.clear();
  for (const auto& m : report.mentions) {
    const std::string& id = m.mention.canonical_id;
    auto& p = report.provenance[id];
    p.poscore = p.poscore ? std::min(*p.poscore, m.poscore) : m.poscore;
    if (m.ig_score && *m.ig_score > cfg.theta_ig) {
      report.s_ig.insert(id);
      p.ig_similarity = p.ig_similarity ? std::max(*p.ig_similarity, *m.ig_score) : *m.ig_score;
    }
  }
  for (const auto& [id, score] : report.ee_scores) {
    if (score > cfg.theta_ee) {
      report.s_ee.insert(id);
      report.provenance[id].ee_count = score;
    }
  }
  report.s_induction = report.s_ig;
  report.s_induction.insert(report.s_ee.begin(), report.s_ee.end());
  // Keep provenance only for selected objects.
  for (auto it = report.provenance.begin(); it != report.provenance.end();) {
    it = report.s_induction.count(it->first) ? std::next(it) : report.provenance.erase(it);
  }
  return report;
}

DetectorMetrics evaluate_detector(std::span<const std::pair<double, int>> scores) {
  DetectorMetrics out;
  for (const auto& [s, label] : scores) {
    if (std::isnan(s)) throw Error(ErrorKind::kDomain, "detector score is NaN");
    (label != 0 ? out.positives : out.negatives) += 1;
  }
  if (out.positives == 0 || out.negatives == 0) {
    throw Error(ErrorKind::kUndefinedMetric, "detector metrics need both classes");
  }
  std::vector<std::pair<double, int>> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const double P = static_cast<double>(out.positives);
  const double N = static_cast<double>(out.negatives);

  // Sweep groups of equal scores from the top. Before a group, the
  // threshold equals the group's score (nothing in it predicted positive).
  double pairs = 0.0;
  std::size_t tp = 0, fp = 0;
  auto consider = [&](double threshold) {
    const double tpr = static_cast<double>(tp) / P;
    const double fpr = static_cast<double>(fp) / N;
    if (fpr <= 0.05) out.tpr_at_5fpr = std::max(out.tpr_at_5fpr, tpr);
    const double f1 = 2.0 * static_cast<double>(tp) /
                      (2.0 * static_cast<double>(tp) + static_cast<double>(fp) + (P - static_cast<double>(tp)));
    if (f1 > out.f1_max || threshold == sorted.front().first) {
      out.f1_max = f1;
      out.threshold = threshold;
      out.acc_at_f1max = (static_cast<double>(tp) + N - static_cast<double>(fp)) / (P + N);
    }
  };
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i].first;
    consider(value);
    std::size_t gp = 0, gn = 0;
    for (; i < sorted.size() && sorted[i].first == value; ++i) (sorted[i].second != 0 ? gp : gn) += 1;
    // Positives in this group beat every negative below it and tie with
    // the group's negatives.
    pairs += static_cast<double>(gp) * (N - static_cast<double>(fp) - static_cast<double>(gn)) +
             0.5 * static_cast<double>(gp) * static_cast<double>(gn);
    tp += gp;
    fp += gn;
  }
  consider(-std::numeric_limits<double>::infinity());
  out.auroc = pairs / (P * N);
  return out;
}

const std::vector<std::string>& detector_score_names() {
  static const std::vector<std::string> names = {"poscore", "top_logit", "logit_entropy", "image_attn_ratio",
                                                 "ig_score", "ee_score"};
  return names;
}

double oriented_score(const MentionScores& m, const std::string& name) {
  if (name == "poscore") return m.poscore;
  if (name == "top_logit") return -m.baselines.top_logit;
  if (name == "logit_entropy") return m.baselines.logit_entropy;
  if (name == "image_attn_ratio") {
    if (!m.baselines.image_attn_ratio) throw Error(ErrorKind::kCapability, "image attention ratio not recorded");
    return -*m.baselines.image_attn_ratio;
  }
  if (name == "ig_score") return m.ig_score.value_or(0.0);
  if (name == "ee_score") return static_cast<double>(m.ee_score);
  throw Error(ErrorKind::kParameter, "unknown detector score '" + name + "'");
}

}  // namespace ccdkit::detection
