// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccdkit/core.hpp"
#include "ccdkit/induction.hpp"

namespace ccdkit::detection {

/// Per-model suppression settings.
struct ModelProfile {
  std::string name;
  double theta_ig;
  int theta_ee;
  std::size_t n_slots;
  std::string separator;
};

const std::vector<ModelProfile>& model_profiles();
// Throws a not-found error for unknown names.
const ModelProfile& profile(std::string_view name);

struct DetectionConfig {
  double theta_ig = 0.75;
  int theta_ee = 1;

  void validate() const;
};

/// 1-based index of the mention's first token over the response length.
double poscore(const ObjectMention& mention, const GenerationRecord& record);

/// Mean of the span's per-token maps, renormalized.
AttentionMap mention_attention(const ObjectMention& mention, const GenerationRecord& record);

double ig_score(const ObjectMention& mention, const AttentionMap& reference, const GenerationRecord& record);

/// Number of imagination sets holding the object minus number of reason
/// sets holding it.
int ee_score(const std::string& canonical_id, std::span<const induction::EeResponse> responses);

struct BaselineScores {
  double top_logit = 0.0;
  double logit_entropy = 0.0;
  std::optional<double> image_attn_ratio;
};

// Read at the mention's first token step.
BaselineScores baseline_scores(const ObjectMention& mention, const GenerationRecord& record);

struct MentionScores {
  ObjectMention mention;
  double poscore = 0.0;
  std::optional<double> ig_score;
  int ee_score = 0;
  BaselineScores baselines;
};

struct Provenance {
  std::optional<double> ig_similarity;
  std::optional<int> ee_count;
  // Earliest PoScore among the object's caption mentions, if any.
  std::optional<double> poscore;
};

struct DetectionReport {
  std::string sample_id;
  std::optional<std::string> reference;
  std::vector<MentionScores> mentions;
  // EE score of every object seen in the caption or an EE response.
  std::map<std::string, int> ee_scores;
  std::set<std::string> s_ig;
  std::set<std::string> s_ee;
  std::set<std::string> s_induction;
  std::map<std::string, Provenance> provenance;
};

/// Scores every mention of `record` (mentions already extracted).
DetectionReport score_sample(const GenerationRecord& record, const std::optional<induction::Reference>& reference,
                             std::span<const induction::EeResponse> ee_responses);

/// Fills s_ig, s_ee (strict thresholds) and their union, with provenance.
DetectionReport select_candidates(DetectionReport report, const DetectionConfig& cfg);

struct DetectorMetrics {
  double auroc = 0.0;
  double tpr_at_5fpr = 0.0;
  double f1_max = 0.0;
  double acc_at_f1max = 0.0;
  // Predictions are score > threshold; -inf means everything positive.
  double threshold = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// label 1 marks a hallucination. Throws an undefined-metric error unless
/// both classes occur.
DetectorMetrics evaluate_detector(std::span<const std::pair<double, int>> scores);

// Score names in the detector table, each oriented so larger = more suspicious.
const std::vector<std::string>& detector_score_names();
double oriented_score(const MentionScores& m, const std::string& name);

}  // namespace ccdkit::detection
