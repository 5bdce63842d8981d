// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccdkit {

using TokenId = std::int32_t;

struct Token {
  TokenId id = 0;
  std::string surface;
};

// Logits and probabilities are always held in 64-bit reals, whatever
// precision the backend computed them in.
using LogitVector = std::vector<double>;
using ProbabilityVector = std::vector<double>;

/// Non-negative attention mass over the image patches for one generated
/// token. The only way to build one is through normalize(), so every map
/// sums to one.
class AttentionMap {
 public:
  AttentionMap() = default;

  static AttentionMap normalize(std::span<const double> raw);
  // Takes weights that already sum to one (within 1e-9) as they are, so a
  // stored map reloads bit for bit.
  static AttentionMap from_normalized(std::span<const double> weights);

  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }
  double operator[](std::size_t i) const { return weights_[i]; }

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;

 private:
  explicit AttentionMap(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

AttentionMap normalize_attention(std::span<const double> raw);

/// Cosine similarity of two equally sized, non-zero vectors. Works on raw
/// (unnormalized) weights as well as on attention maps.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const AttentionMap& a, const AttentionMap& b);

/// Temperature softmax with max-shift. Entries equal to -inf get exactly
/// zero probability; at least one entry must be finite.
ProbabilityVector softmax(std::span<const double> logits, double temperature = 1.0);

/// Shannon entropy in nats; 0 * ln 0 is taken as 0.
double entropy(std::span<const double> probs);

// Throws a validation error naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

enum class MentionLabel { kUnknown, kGrounded, kHallucinated };

std::string_view label_name(MentionLabel label);
MentionLabel parse_label(std::string_view name);

// One object occurrence in a response. [begin, end) indexes response tokens.
struct ObjectMention {
  std::string surface;
  std::string canonical_id;
  std::size_t begin = 0;
  std::size_t end = 0;
  MentionLabel label = MentionLabel::kUnknown;

  friend bool operator==(const ObjectMention&, const ObjectMention&) = default;
};

struct StepStats {
  double top_logit = 0.0;
  double entropy = 0.0;
  std::optional<double> image_attention_ratio;

  friend bool operator==(const StepStats&, const StepStats&) = default;
};

struct GenerationRecord {
  std::string sample_id;
  std::string prompt;
  std::vector<TokenId> prompt_tokens;
  // Generated tokens, EOS excluded. ended_with_eos records whether it came.
  std::vector<TokenId> response_tokens;
  std::vector<std::string> response_pieces;
  bool ended_with_eos = false;
  std::vector<StepStats> steps;
  // One map per response token when the backend supplies attention.
  std::vector<AttentionMap> attention_maps;
  bool attention_available = false;
  std::vector<ObjectMention> mentions;

  std::size_t length() const noexcept { return response_tokens.size(); }
  std::string text() const;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

// 64-bit FNV-1a; stable across platforms, used for seeds and config hashes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);
std::string hex64(std::uint64_t value);

/// Seeded generator whose streams are identical on every platform (the
/// standard distributions are not, so they are avoided here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ccdkit
