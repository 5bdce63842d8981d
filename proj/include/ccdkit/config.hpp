// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration. The file is a small TOML subset:
//
//   schema_version = 1
//   seed = 7
//   samples = ["img-1", "img-2"]
//   [backend]
//   kind = "synthetic"          # or "wire"
//   world = "world.json"
//   [decoding]
//   alpha = 1.0
//
// Tables may be dotted ([a.b]); values are strings, integers, floats,
// booleans or single-line arrays of those. '#' starts a comment outside
// strings. Keys are flattened to "table.key".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccdkit/analysis.hpp"
#include "ccdkit/cct.hpp"
#include "ccdkit/decoding.hpp"
#include "ccdkit/detection.hpp"
#include "ccdkit/induction.hpp"
#include "ccdkit/metrics.hpp"

namespace ccdkit::config {

struct Value {
  enum class Type { kBool, kInt, kFloat, kString, kArray };
  Type type = Type::kString;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;

  // Canonical text form, used for hashing.
  std::string repr() const;
};

class Document {
 public:
  static Document parse(const std::string& text, const std::string& origin = "<config>");
  static Document load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const Value& at(const std::string& key) const;
  const std::map<std::string, Value>& values() const noexcept { return values_; }
  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_strings(const std::string& key) const;

 private:
  std::map<std::string, Value> values_;
};

struct BackendSpec {
  std::string kind = "synthetic";
  std::filesystem::path world;
  std::string command;
  std::filesystem::path socket;
  std::string model = "llava-v1.5-7b";
  std::optional<std::filesystem::path> transcript;
};

struct AnalysisConfig {
  std::size_t bins = 10;
  std::size_t repetition_k = 5;
  bool repetition_distinct = false;
  analysis::Averaging enrichment_averaging = analysis::Averaging::kMentions;
};

struct RunConfig {
  int schema_version = 1;
  BackendSpec backend;
  std::filesystem::path lexicon;
  std::filesystem::path annotations;
  std::optional<std::filesystem::path> prompts;
  // Empty means every annotated sample.
  std::vector<std::string> samples;
  decoding::DecodingConfig decoding;
  detection::DetectionConfig detection;
  cct::CctConfig cct;
  induction::InductionConfig induction;
  metrics::RecallMode recall = metrics::RecallMode::kPooled;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  // FNV-1a over the canonical settings, output_dir excluded.
  std::string hash;

  /// Relative paths resolve against `base_dir`. A seed override replaces
  /// the file's seed before hashing.
  static RunConfig from_document(const Document& doc, const std::filesystem::path& base_dir,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);
  static RunConfig load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);
};

}  // namespace ccdkit::config
