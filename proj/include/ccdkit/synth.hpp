// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdkit/backend.hpp"

namespace ccdkit::synth {

struct SyntheticImage {
  // Objects really present, in the order the model describes them.
  std::vector<std::string> grounded;
  // Absent but tempting objects, most tempting first.
  std::vector<std::string> pool;
  std::map<std::string, std::vector<std::size_t>> regions;
};

/// Data behind the synthetic backend. Loaded from a JSON fixture:
///
///   {"model": "...", "vocab": [...], "objects": [...], "patch_count": 16,
///    "hallucination_budget": 2, "seed": 1234,
///    "images": {"img-1": {"grounded": [...], "pool": [...],
///                         "regions": {"dog": [0, 1], ...}}}}
///
/// `objects` lists the vocabulary words that name objects. Every image's
/// grounded and pool lists are disjoint, each grounded object owns at least
/// one patch and regions of distinct objects do not overlap.
struct SyntheticWorld {
  std::string model = "synthetic-lvlm";
  std::vector<std::string> vocab;
  std::vector<std::string> objects;
  std::map<std::string, SyntheticImage> images;
  std::size_t patch_count = 16;
  // Sentences the model adds once every grounded object is described.
  std::size_t hallucination_budget = 2;
  std::uint64_t seed = 0;

  static SyntheticWorld from_json(const nlohmann::json& j);
  static SyntheticWorld load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws a validation error describing the first broken invariant.
  void validate() const;
};

// Logit levels used by the grammar. Exposed so tests can reason about the
// margins the contrastive step has to overcome.
inline constexpr double kFloorLogit = -4.0;
inline constexpr double kForcedLogit = 6.0;
inline constexpr double kCctBoost = 5.0;
inline constexpr double kAttentionNoise = 0.01;
inline constexpr double kRegionMass = 0.9;

/// Deterministic stand-in for a vision-language model.
///
/// Captions follow the template "the image features a X. there is a Y. ..."
/// Grounded objects come first; once they are all described the pool
/// objects take over until `hallucination_budget` extra sentences were
/// produced, then EOS. "there is also a" jumps straight to the first pool
/// object. Prompts containing "imagine" get the two-line
/// Imagination/Reason answer, the imagined object chosen by direction.
///
/// Attention for a grounded object concentrates on its region; attention
/// for any other object is the image's dispersed template plus bounded
/// noise. Objects named inside the cct span get a logit boost in that
/// request only.
class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(SyntheticWorld world);

  BackendSession open_session(const std::string& model, const std::string& image_ref) override;
  StepResponse step(const BackendSession& session, const StepRequest& request) override;
  std::vector<TokenId> encode(const BackendSession& session, const std::string& text) override;
  std::vector<std::string> decode_pieces(const BackendSession& session,
                                         std::span<const TokenId> ids) override;

  const SyntheticWorld& world() const noexcept { return world_; }

  TokenId token_id(const std::string& word) const;
  const std::string& token_text(TokenId id) const;
  std::vector<TokenId> tokenize(const std::string& text) const;

  // Records every step request's context when enabled (for splice tests).
  void set_request_logging(bool enabled);
  std::vector<StepRequest> request_log() const;

 private:
  const SyntheticImage& image_for(const BackendSession& session) const;
  LogitVector base_logits(const SyntheticImage& image, const std::vector<TokenId>& visible,
                          std::size_t response_begin) const;
  std::vector<double> dispersed_template(const std::string& image_ref) const;

  SyntheticWorld world_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<bool> is_object_;
  std::atomic<std::uint64_t> session_counter_{0};

  mutable std::mutex log_mutex_;
  bool logging_ = false;
  std::vector<StepRequest> log_;
};

}  // namespace ccdkit::synth
