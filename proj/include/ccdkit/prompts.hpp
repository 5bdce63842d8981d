// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ccdkit::prompts {

inline constexpr std::string_view kCaption = "Please help me describe the image in detail.";

// Appended after a finished caption to coax out one more object.
inline constexpr std::string_view kInductionCue = "There is also";

// {direction} is replaced by one of kDirections.
inline constexpr std::string_view kExternalExpansion =
    "Based on this image, please imagine what object might be in the {direction} outside the frame, and "
    "explain why. Specifically, your response should follow the following format:\n\n"
    "Imagination: <one imaginary object here>\n"
    "Reason: The image features <briefly describe this image, be careful to mention all objects related to "
    "your imagination>, which suggests that <your imagination here>.";

inline constexpr std::array<std::string_view, 8> kDirections = {
    "top",          "bottom",          "left side",          "right side",
    "top left corner", "top right corner", "bottom left corner", "bottom right corner",
};

std::string external_expansion(std::string_view direction);

struct EnrichmentTemplate {
  std::string name;
  std::string text;
  // Number of known-fact sentences the single {} placeholder takes.
  std::size_t sentences = 0;
};

// "w/o sentence", "+1 sentence", "+2 sentences".
const std::vector<EnrichmentTemplate>& enrichment_templates();

/// Fills the template's {} with the sentences joined by single spaces.
/// Throws a template error when the count does not match.
std::string render(const EnrichmentTemplate& tmpl, const std::vector<std::string>& sentences);

/// Prompt set as shipped in a versioned asset file:
///   {"version": 1, "caption": ..., "induction_cue": ..., "external_expansion": ...,
///    "directions": [...], "enrichment": [{"name", "text", "sentences"}],
///    "repetition": [...]}
struct PromptSet {
  int version = 1;
  std::string caption;
  std::string induction_cue;
  std::string external_expansion;
  std::vector<std::string> directions;
  std::vector<EnrichmentTemplate> enrichment;
  std::vector<std::string> repetition;

  static PromptSet builtin();
  static PromptSet load(const std::filesystem::path& path);
};

}  // namespace ccdkit::prompts
