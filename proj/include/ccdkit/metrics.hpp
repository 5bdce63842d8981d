// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ccdkit/core.hpp"
#include "ccdkit/extraction.hpp"

namespace ccdkit::metrics {

/// One caption reduced to object-id sets (duplicates collapsed).
struct CaptionEval {
  std::string sample_id;
  std::set<std::string> mentioned;
  std::set<std::string> hallucinated;
  std::set<std::string> ground_truth;
  std::optional<std::set<std::string>> hallucination_targets;
  std::size_t length = 0;
};

CaptionEval caption_eval(const GenerationRecord& record, const extraction::SampleAnnotation& truth);

enum class RecallMode { kPooled, kPerSample };

struct ChairResult {
  double chair_s = 0.0;
  double chair_i = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double len = 0.0;
};

/// CHAIR family over a corpus. kPooled divides the total grounded mentioned
/// ids by the total ground-truth ids; kPerSample averages per-sample recall
/// (a sample without ground truth contributes 0).
ChairResult chair(std::span<const CaptionEval> evals, RecallMode recall = RecallMode::kPooled);

struct AmberResult {
  double chair = 0.0;
  double cover = 0.0;
  double hal = 0.0;
  // Absent when some sample has no hallucination targets.
  std::optional<double> cog;
  std::vector<std::string> warnings;
};

/// Generative AMBER metrics. Per-sample ratios use 0/0 := 0.
AmberResult amber_generative(std::span<const CaptionEval> evals);

}  // namespace ccdkit::metrics
