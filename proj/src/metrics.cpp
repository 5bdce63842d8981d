// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/metrics.hpp"

#include "ccdkit/error.hpp"

namespace ccdkit::metrics {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& x : a) n += b.count(x);
  return n;
}

}  // namespace

CaptionEval caption_eval(const GenerationRecord& record, const extraction::SampleAnnotation& truth) {
  CaptionEval e;
  e.sample_id = record.sample_id;
  e.ground_truth = truth.objects;
  e.hallucination_targets = truth.hallucination_targets;
  e.length = record.length();
  for (const auto& m : record.mentions) {
    e.mentioned.insert(m.canonical_id);
    if (!truth.objects.count(m.canonical_id)) e.hallucinated.insert(m.canonical_id);
  }
  return e;
}

ChairResult chair(std::span<const CaptionEval> evals, RecallMode recall) {
  if (evals.empty()) throw Error(ErrorKind::kUndefinedMetric, "chair over an empty corpus");
  std::size_t with_hal = 0, hal = 0, mentioned = 0, grounded = 0, truth = 0, tokens = 0;
  double recall_sum = 0.0;
  for (const auto& e : evals) {
    with_hal += e.hallucinated.empty() ? 0 : 1;
    hal += e.hallucinated.size();
    mentioned += e.mentioned.size();
    const std::size_t g = intersection_size(e.mentioned, e.ground_truth);
    grounded += g;
    truth += e.ground_truth.size();
    recall_sum += ratio(g, e.ground_truth.size());
    tokens += e.length;
  }
  if (mentioned == 0) throw Error(ErrorKind::kUndefinedMetric, "chair_i undefined: no object mentioned");
  ChairResult r;
  const auto n = static_cast<double>(evals.size());
  r.chair_s = static_cast<double>(with_hal) / n;
  r.chair_i = ratio(hal, mentioned);
  r.precision = 1.0 - r.chair_i;
  r.recall = recall == RecallMode::kPooled ? ratio(grounded, truth) : recall_sum / n;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.len = static_cast<double>(tokens) / n;
  return r;
}

AmberResult amber_generative(std::span<const CaptionEval> evals) {
  if (evals.empty()) throw Error(ErrorKind::kUndefinedMetric, "amber over an empty corpus");
  AmberResult r;
  double chair_sum = 0.0, cover_sum = 0.0, cog_sum = 0.0;
  std::size_t with_hal = 0;
  bool have_targets = true;
  for (const auto& e : evals) {
    chair_sum += ratio(e.hallucinated.size(), e.mentioned.size());
    cover_sum += ratio(intersection_size(e.mentioned, e.ground_truth), e.ground_truth.size());
    with_hal += e.hallucinated.empty() ? 0 : 1;
    if (!e.hallucination_targets) {
      if (have_targets) r.warnings.push_back("sample '" + e.sample_id + "' has no hallucination targets; cog omitted");
      have_targets = false;
      continue;
    }
    cog_sum += ratio(intersection_size(e.hallucinated, *e.hallucination_targets), e.hallucinated.size());
  }
  const auto n = static_cast<double>(evals.size());
  r.chair = chair_sum / n;
  r.cover = cover_sum / n;
  r.hal = static_cast<double>(with_hal) / n;
  if (have_targets) r.cog = cog_sum / n;
  return r;
}

}  // namespace ccdkit::metrics
