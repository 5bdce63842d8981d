// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdkit/core.hpp"

namespace ccdkit::extraction {

struct LexiconEntry {
  std::vector<std::string> synonyms;
  std::vector<std::string> plurals;
};

/// Object vocabulary: canonical id -> surface forms. File format:
///
///   {"dog": {"synonyms": ["dog", "puppy"], "plurals": ["dogs", "puppies"]}}
///
/// Surfaces are matched lowercase and must be unique across ids.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::map<std::string, LexiconEntry> entries, std::string source);

  static Lexicon from_json(const nlohmann::json& j, std::string source);
  static Lexicon load(const std::filesystem::path& path);

  bool contains(std::string_view canonical_id) const { return entries_.count(std::string(canonical_id)) > 0; }
  // Canonical id for a surface (case-insensitive), if registered.
  std::optional<std::string> resolve(std::string_view surface) const;
  std::vector<std::string> canonical_ids() const;
  const std::string& source() const noexcept { return source_; }
  const std::map<std::string, std::string>& surfaces() const noexcept { return surfaces_; }

 private:
  std::map<std::string, LexiconEntry> entries_;
  std::map<std::string, std::string> surfaces_;
  std::string source_;
};

/// Character range of every token in a text.
class TokenAlignment {
 public:
  // Pieces concatenate to the text; token i covers piece i.
  static TokenAlignment from_pieces(const std::vector<std::string>& pieces);
  // One token per whitespace-separated word, for bare text.
  static TokenAlignment from_words(std::string_view text);

  // Token index covering the character at `offset`.
  std::optional<std::size_t> token_at(std::size_t offset) const;
  std::size_t size() const noexcept { return ranges_.size(); }
  const std::vector<std::pair<std::size_t, std::size_t>>& ranges() const noexcept { return ranges_; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

/// Lexicon matches in `text`, in text order. Matches start and end at word
/// boundaries; among overlapping candidates the longer wins, then the one
/// further left. Spans are token indices taken from `alignment`.
std::vector<ObjectMention> extract_mentions(std::string_view text, const TokenAlignment& alignment,
                                            const Lexicon& lexicon);

// Canonical ids mentioned in bare text, in order of first appearance.
std::vector<std::string> extract_objects(std::string_view text, const Lexicon& lexicon);

// Mentions of a generated response, spans in response-token indices.
std::vector<ObjectMention> extract_record_mentions(const GenerationRecord& record, const Lexicon& lexicon);

struct SampleAnnotation {
  std::set<std::string> objects;
  std::optional<std::set<std::string>> hallucination_targets;
};

/// Ground truth per sample. File format:
///
///   {"img-1": {"objects": ["dog"], "hallucination_targets": ["kite"]}}
class AnnotationSet {
 public:
  static AnnotationSet from_json(const nlohmann::json& j, const Lexicon& lexicon);
  static AnnotationSet load(const std::filesystem::path& path, const Lexicon& lexicon);

  const SampleAnnotation& at(const std::string& sample_id) const;
  bool contains(const std::string& sample_id) const { return samples_.count(sample_id) > 0; }
  std::vector<std::string> sample_ids() const;

 private:
  std::map<std::string, SampleAnnotation> samples_;
};

/// Grounded when the canonical id is in the sample's ground truth,
/// hallucinated otherwise. Every mention is labeled, duplicates included.
std::vector<ObjectMention> label_mentions(std::vector<ObjectMention> mentions, const AnnotationSet& annotations,
                                          const std::string& sample_id);

}  // namespace ccdkit::extraction
