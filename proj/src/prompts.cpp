// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/prompts.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ccdkit/error.hpp"

namespace ccdkit::prompts {

namespace {

constexpr std::string_view kDirectionSlot = "{direction}";

}  // namespace

std::string external_expansion(std::string_view direction) {
  std::string out(kExternalExpansion);
  out.replace(out.find(kDirectionSlot), kDirectionSlot.size(), direction);
  return out;
}

const std::vector<EnrichmentTemplate>& enrichment_templates() {
  static const std::vector<EnrichmentTemplate> templates = {
      {"w/o sentence",
       "Please help me describe this image in detail. I'd like to hear more about it, even if it's just small "
       "things. Anything you can say about it would be useful in some way. It doesn't have to be important, "
       "just whatever comes to mind.",
       0},
      {"+1 sentence",
       "I already know that {} Could you describe any other details of the image for me? It doesn't have to "
       "be anything specific, just whatever else you can say about it. Even if it seems unimportant, it might "
       "still be worth mentioning.",
       1},
      {"+2 sentences",
       "I already know that {} Could you describe any other details of the image for me? Maybe there's "
       "something that hasn't been mentioned yet, or just anything that comes to mind.",
       2},
  };
  return templates;
}

std::string render(const EnrichmentTemplate& tmpl, const std::vector<std::string>& sentences) {
  const auto slot = tmpl.text.find("{}");
  const bool has_slot = slot != std::string::npos;
  if (has_slot && tmpl.text.find("{}", slot + 2) != std::string::npos) {
    throw Error(ErrorKind::kTemplate, "template '" + tmpl.name + "' has more than one placeholder");
  }
  if (has_slot != (tmpl.sentences > 0) || sentences.size() != tmpl.sentences) {
    throw Error(ErrorKind::kTemplate, "template '" + tmpl.name + "' takes " + std::to_string(tmpl.sentences) +
                                          " sentence(s), got " + std::to_string(sentences.size()));
  }
  if (!has_slot) return tmpl.text;
  std::string joined;
  for (const auto& s : sentences) {
    if (!joined.empty()) joined += ' ';
    joined += s;
  }
  std::string out = tmpl.text;
  out.replace(slot, 2, joined);
  return out;
}

PromptSet PromptSet::builtin() {
  PromptSet p;
  p.caption = std::string(kCaption);
  p.induction_cue = std::string(kInductionCue);
  p.external_expansion = std::string(kExternalExpansion);
  p.directions.assign(kDirections.begin(), kDirections.end());
  p.enrichment = enrichment_templates();
  p.repetition = {
      "Please help me describe the image in detail.",
      "Describe this image in as much detail as you can.",
      "Can you give me a detailed description of this picture?",
      "Tell me everything you see in this image.",
      "Write a thorough description of the scene in the image.",
  };
  return p;
}

PromptSet PromptSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open prompt file " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    PromptSet p;
    p.version = j.at("version").get<int>();
    if (p.version != 1) throw Error(ErrorKind::kValidation, "unsupported prompt file version");
    p.caption = j.at("caption").get<std::string>();
    p.induction_cue = j.at("induction_cue").get<std::string>();
    p.external_expansion = j.at("external_expansion").get<std::string>();
    if (p.external_expansion.find(kDirectionSlot) == std::string::npos) {
      throw Error(ErrorKind::kTemplate, "external_expansion lacks the {direction} slot");
    }
    p.directions = j.at("directions").get<std::vector<std::string>>();
    for (const auto& e : j.at("enrichment")) {
      p.enrichment.push_back(
          {e.at("name").get<std::string>(), e.at("text").get<std::string>(), e.at("sentences").get<std::size_t>()});
    }
    p.repetition = j.at("repetition").get<std::vector<std::string>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, "prompt file " + path.string() + ": " + e.what());
  }
}

}  // namespace ccdkit::prompts
