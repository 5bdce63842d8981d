// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "ccdkit/error.hpp"

namespace ccdkit::extraction {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

json read_json(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, std::string("cannot open ") + what + " " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string(what) + " " + path.string() + ": " + e.what());
  }
}

}  // namespace

Lexicon::Lexicon(std::map<std::string, LexiconEntry> entries, std::string source)
    : entries_(std::move(entries)), source_(std::move(source)) {
  for (const auto& [id, entry] : entries_) {
    auto add = [&, id = id](const std::string& surface) {
      const std::string key = lower(surface);
      if (key.empty()) throw Error(ErrorKind::kValidation, "lexicon: empty surface for '" + id + "'");
      auto [it, inserted] = surfaces_.emplace(key, id);
      if (!inserted && it->second != id) {
        throw Error(ErrorKind::kValidation,
                    "lexicon: surface '" + key + "' claimed by both '" + it->second + "' and '" + id + "'");
      }
    };
    for (const auto& s : entry.synonyms) add(s);
    for (const auto& s : entry.plurals) add(s);
  }
}

Lexicon Lexicon::from_json(const json& j, std::string source) {
  if (!j.is_object()) throw Error(ErrorKind::kValidation, "lexicon must be a JSON object");
  std::map<std::string, LexiconEntry> entries;
  for (const auto& [id, e] : j.items()) {
    LexiconEntry entry;
    entry.synonyms = e.value("synonyms", std::vector<std::string>{});
    entry.plurals = e.value("plurals", std::vector<std::string>{});
    entries.emplace(id, std::move(entry));
  }
  return Lexicon(std::move(entries), std::move(source));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  return from_json(read_json(path, "lexicon"), path.stem().string());
}

std::optional<std::string> Lexicon::resolve(std::string_view surface) const {
  auto it = surfaces_.find(lower(surface));
  if (it == surfaces_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Lexicon::canonical_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, entry] : entries_) ids.push_back(id);
  return ids;
}

TokenAlignment TokenAlignment::from_pieces(const std::vector<std::string>& pieces) {
  TokenAlignment a;
  std::size_t offset = 0;
  for (const auto& p : pieces) {
    a.ranges_.emplace_back(offset, offset + p.size());
    offset += p.size();
  }
  return a;
}

TokenAlignment TokenAlignment::from_words(std::string_view text) {
  TokenAlignment a;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    a.ranges_.emplace_back(start, i);
  }
  return a;
}

std::optional<std::size_t> TokenAlignment::token_at(std::size_t offset) const {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), offset,
                             [](std::size_t off, const auto& r) { return off < r.first; });
  if (it == ranges_.begin()) return std::nullopt;
  --it;
  // Skip empty tokens sharing the start offset.
  if (offset >= it->second) return std::nullopt;
  return static_cast<std::size_t>(it - ranges_.begin());
}

std::vector<ObjectMention> extract_mentions(std::string_view text, const TokenAlignment& alignment,
                                            const Lexicon& lexicon) {
  const std::string low = lower(text);
  struct Match {
    std::size_t begin, end;
    const std::string* canonical;
  };
  std::vector<Match> candidates;
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!is_word_char(low[i]) || (i > 0 && is_word_char(low[i - 1]))) continue;
    // Surfaces starting with this character sort contiguously.
    auto it = lexicon.surfaces().lower_bound(std::string(1, low[i]));
    for (; it != lexicon.surfaces().end() && it->first[0] == low[i]; ++it) {
      const std::string& s = it->first;
      const std::size_t end = i + s.size();
      if (end > low.size() || low.compare(i, s.size(), s) != 0) continue;
      if (end < low.size() && is_word_char(low[end])) continue;
      candidates.push_back({i, end, &it->second});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    const std::size_t la = a.end - a.begin, lb = b.end - b.begin;
    return la != lb ? la > lb : a.begin < b.begin;
  });
  std::vector<Match> chosen;
  for (const Match& m : candidates) {
    const bool overlaps = std::any_of(chosen.begin(), chosen.end(),
                                      [&](const Match& c) { return m.begin < c.end && c.begin < m.end; });
    if (!overlaps) chosen.push_back(m);
  }
  std::sort(chosen.begin(), chosen.end(), [](const Match& a, const Match& b) { return a.begin < b.begin; });

  std::vector<ObjectMention> out;
  out.reserve(chosen.size());
  for (const Match& m : chosen) {
    const auto first = alignment.token_at(m.begin);
    const auto last = alignment.token_at(m.end - 1);
    if (!first || !last) {
      throw Error(ErrorKind::kExtraction,
                  "no token covers character offset " + std::to_string(first ? m.end - 1 : m.begin));
    }
    ObjectMention mention;
    mention.surface = std::string(text.substr(m.begin, m.end - m.begin));
    mention.canonical_id = *m.canonical;
    mention.begin = *first;
    mention.end = *last + 1;
    out.push_back(std::move(mention));
  }
  return out;
}

std::vector<std::string> extract_objects(std::string_view text, const Lexicon& lexicon) {
  std::vector<std::string> ids;
  for (const auto& m : extract_mentions(text, TokenAlignment::from_words(text), lexicon)) {
    if (std::find(ids.begin(), ids.end(), m.canonical_id) == ids.end()) ids.push_back(m.canonical_id);
  }
  return ids;
}

std::vector<ObjectMention> extract_record_mentions(const GenerationRecord& record, const Lexicon& lexicon) {
  return extract_mentions(record.text(), TokenAlignment::from_pieces(record.response_pieces), lexicon);
}

AnnotationSet AnnotationSet::from_json(const json& j, const Lexicon& lexicon) {
  if (!j.is_object()) throw Error(ErrorKind::kValidation, "annotations must be a JSON object");
  AnnotationSet set;
  auto checked = [&](const std::string& sample, const json& arr) {
    std::set<std::string> ids;
    for (const auto& v : arr) {
      const auto id = v.get<std::string>();
      if (!lexicon.contains(id)) {
        throw Error(ErrorKind::kValidation, "annotations: '" + id + "' in sample " + sample + " is not in the lexicon");
      }
      ids.insert(id);
    }
    return ids;
  };
  for (const auto& [sample, a] : j.items()) {
    SampleAnnotation ann;
    ann.objects = checked(sample, a.at("objects"));
    if (a.contains("hallucination_targets")) ann.hallucination_targets = checked(sample, a.at("hallucination_targets"));
    set.samples_.emplace(sample, std::move(ann));
  }
  return set;
}

AnnotationSet AnnotationSet::load(const std::filesystem::path& path, const Lexicon& lexicon) {
  try {
    return from_json(read_json(path, "annotations"), lexicon);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, "annotations " + path.string() + ": " + e.what());
  }
}

const SampleAnnotation& AnnotationSet::at(const std::string& sample_id) const {
  auto it = samples_.find(sample_id);
  if (it == samples_.end()) throw Error(ErrorKind::kNotFound, "no annotation for sample '" + sample_id + "'");
  return it->second;
}

std::vector<std::string> AnnotationSet::sample_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, ann] : samples_) ids.push_back(id);
  return ids;
}

std::vector<ObjectMention> label_mentions(std::vector<ObjectMention> mentions, const AnnotationSet& annotations,
                                          const std::string& sample_id) {
  const SampleAnnotation& truth = annotations.at(sample_id);
  for (auto& m : mentions) {
    m.label = truth.objects.count(m.canonical_id) ? MentionLabel::kGrounded : MentionLabel::kHallucinated;
  }
  return mentions;
}

}  // namespace ccdkit::extraction
