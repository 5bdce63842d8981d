// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "ccdkit/backend.hpp"
#include "ccdkit/core.hpp"
#include "ccdkit/decoding.hpp"
#include "ccdkit/extraction.hpp"
#include "ccdkit/prompts.hpp"

namespace ccdkit::analysis {

/// Normalized PoScore frequencies per class over uniform bins on [0, 1].
struct PoscoreHistogram {
  std::size_t bins = 0;
  std::vector<double> hallucinated;
  std::vector<double> grounded;
  std::size_t hallucinated_count = 0;
  std::size_t grounded_count = 0;
  double hallucinated_mean = 0.0;
  double grounded_mean = 0.0;
};

// Uses the labeled mentions of each record; unknown labels are skipped.
PoscoreHistogram poscore_histogram(std::span<const GenerationRecord> records, std::size_t bins);

/// Attention similarities of all same-response mention pairs: both
/// hallucinated (s_h) or both grounded (s_n). Mixed pairs are dropped.
struct SimilaritySets {
  std::vector<double> s_h;
  std::vector<double> s_n;
};

SimilaritySets similarity_sets(std::span<const GenerationRecord> records);

struct RepetitionStats {
  std::size_t k = 0;
  // Index k-1 holds N(k) and R(k).
  std::vector<double> n;
  std::vector<double> r;
};

/// `sets[s][j]` is the set of hallucinated ids of sample s under prompt j.
/// c_s(h) counts the prompts whose set holds h; N(k) sums k over every
/// object with c_s(h) = k, or 1 per object when `distinct` is set.
RepetitionStats repetition_stats(const std::vector<std::vector<std::set<std::string>>>& sets, std::size_t k = 5,
                                 bool distinct = false);

enum class Averaging { kMentions, kSamples };

struct EnrichmentSample {
  std::string sample_id;
  // Known facts, inserted in order; the first n fill an n-sentence template.
  std::vector<std::string> sentences;
};

struct EnrichmentLevel {
  std::string name;
  double mean_poscore = 0.0;
  std::size_t count = 0;
};

/// Captions every sample once per template and reports the mean PoScore of
/// hallucinated mentions per template.
std::vector<EnrichmentLevel> enrichment_experiment(Backend& backend, const std::string& model,
                                                   std::span<const EnrichmentSample> samples,
                                                   std::span<const prompts::EnrichmentTemplate> templates,
                                                   const extraction::Lexicon& lexicon,
                                                   const extraction::AnnotationSet& annotations,
                                                   const decoding::DecodingConfig& cfg,
                                                   Averaging averaging = Averaging::kMentions);

}  // namespace ccdkit::analysis
