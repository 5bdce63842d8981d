// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/induction.hpp"

#include <algorithm>
#include <cctype>

#include "ccdkit/detection.hpp"

namespace ccdkit::induction {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Text after "<label>:" when the line starts with the label.
std::optional<std::string_view> labeled_value(std::string_view line, std::string_view label) {
  line = trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '-')) line.remove_prefix(1);
  line = trim(line);
  if (line.size() < label.size() || lower(line.substr(0, label.size())) != label) return std::nullopt;
  std::string_view rest = line.substr(label.size());
  while (!rest.empty() && (rest.front() == ' ' || rest.front() == '*')) rest.remove_prefix(1);
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  return rest.substr(1);
}

std::set<std::string> objects_in(std::string_view text, const extraction::Lexicon& lexicon) {
  const auto ids = extraction::extract_objects(text, lexicon);
  return {ids.begin(), ids.end()};
}

}  // namespace

std::optional<Reference> induce_reference(Backend& backend, const BackendSession& session,
                                          const GenerationRecord& record, const extraction::Lexicon& lexicon,
                                          const InductionConfig& cfg) {
  if (cfg.window == 0) return std::nullopt;
  std::vector<TokenId> forced = record.response_tokens;
  const auto cue = backend.encode(session, cfg.cue);
  forced.insert(forced.end(), cue.begin(), cue.end());

  decoding::DecodingConfig greedy;
  greedy.strategy = decoding::Strategy::kGreedy;
  greedy.max_new_tokens = cfg.window;
  decoding::Prompt prompt{record.prompt, record.prompt_tokens};
  GenerationRecord continuation = decoding::generate(backend, session, prompt, {}, greedy, forced);
  continuation.sample_id = record.sample_id;

  for (const auto& m : extraction::extract_record_mentions(continuation, lexicon)) {
    if (m.begin >= cfg.window) break;
    Reference ref;
    ref.mention = m;
    ref.attention = detection::mention_attention(m, continuation);
    continuation.mentions = {m};
    ref.continuation = std::move(continuation);
    return ref;
  }
  return std::nullopt;
}

EeResponse parse_ee_response(std::string_view direction, std::string_view text, const extraction::Lexicon& lexicon) {
  EeResponse r;
  r.direction = std::string(direction);
  r.raw_text = std::string(text);
  bool saw_imagination = false, saw_reason = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!saw_imagination) {
      if (auto v = labeled_value(line, "imagination")) {
        r.imagination = objects_in(*v, lexicon);
        saw_imagination = true;
        continue;
      }
    }
    if (!saw_reason) {
      if (auto v = labeled_value(line, "reason")) {
        std::string_view premise = *v;
        const auto cut = lower(premise).find("which suggests");
        if (cut != std::string::npos) premise = premise.substr(0, cut);
        r.reason = objects_in(premise, lexicon);
        saw_reason = true;
      }
    }
  }
  r.parse_warning = !(saw_imagination && saw_reason);
  return r;
}

std::vector<EeResponse> run_ee_protocol(Backend& backend, const BackendSession& session,
                                        const prompts::PromptSet& prompts, const extraction::Lexicon& lexicon,
                                        const InductionConfig& cfg) {
  decoding::DecodingConfig greedy;
  greedy.strategy = decoding::Strategy::kGreedy;
  greedy.max_new_tokens = cfg.ee_max_new_tokens;
  std::vector<EeResponse> out;
  out.reserve(prompts.directions.size());
  for (const auto& direction : prompts.directions) {
    std::string text = prompts.external_expansion;
    const std::string slot = "{direction}";
    text.replace(text.find(slot), slot.size(), direction);
    decoding::Prompt prompt{text, backend.encode(session, text)};
    const GenerationRecord rec = decoding::generate(backend, session, prompt, {}, greedy);
    out.push_back(parse_ee_response(direction, rec.text(), lexicon));
  }
  return out;
}

}  // namespace ccdkit::induction
