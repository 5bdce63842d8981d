// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ccdkit/backend.hpp"
#include "ccdkit/core.hpp"
#include "ccdkit/decoding.hpp"
#include "ccdkit/extraction.hpp"
#include "ccdkit/prompts.hpp"

namespace ccdkit::induction {

struct InductionConfig {
  // Tokens after the cue searched for the reference object.
  std::size_t window = 20;
  std::size_t ee_max_new_tokens = 128;
  std::string cue = std::string(prompts::kInductionCue);
};

/// The object the model produced after the cue, with its attention map.
/// The mention's span indexes `continuation.response_tokens`.
struct Reference {
  ObjectMention mention;
  AttentionMap attention;
  GenerationRecord continuation;
};

/// Continues a finished caption after the induction cue (greedy) and takes
/// the first object mentioned within the window. Returns nullopt when no
/// object shows up; the input record is left untouched.
std::optional<Reference> induce_reference(Backend& backend, const BackendSession& session,
                                          const GenerationRecord& record, const extraction::Lexicon& lexicon,
                                          const InductionConfig& cfg);

struct EeResponse {
  std::string direction;
  std::set<std::string> imagination;
  std::set<std::string> reason;
  std::string raw_text;
  bool parse_warning = false;

  friend bool operator==(const EeResponse&, const EeResponse&) = default;
};

/// Reads the "Imagination:" and "Reason:" lines (labels case-insensitive).
/// The reason set covers the description before "which suggests", i.e. the
/// objects the model reasons from, not the one it arrives at. A missing
/// line leaves its set empty and raises parse_warning.
EeResponse parse_ee_response(std::string_view direction, std::string_view text, const extraction::Lexicon& lexicon);

/// One greedy answer per direction, each from a fresh context, returned in
/// direction order.
std::vector<EeResponse> run_ee_protocol(Backend& backend, const BackendSession& session,
                                        const prompts::PromptSet& prompts, const extraction::Lexicon& lexicon,
                                        const InductionConfig& cfg);

}  // namespace ccdkit::induction
