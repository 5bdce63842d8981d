// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccdkit/error.hpp"

namespace ccdkit {

AttentionMap AttentionMap::normalize(std::span<const double> raw) {
  if (raw.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "attention vector is empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || raw[i] < 0.0) {
      throw Error(ErrorKind::kDegenerateInput,
                  "attention weight " + std::to_string(i) + " is negative or non-finite");
    }
    sum += raw[i];
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorKind::kDegenerateInput, "attention weights sum to zero");
  }
  std::vector<double> w(raw.begin(), raw.end());
  for (double& x : w) x /= sum;
  return AttentionMap(std::move(w));
}

AttentionMap AttentionMap::from_normalized(std::span<const double> weights) {
  static_cast<void>(normalize(weights));  // same value checks
  double sum = 0.0;
  for (double x : weights) sum += x;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::kDegenerateInput, "stored attention map sums to " + std::to_string(sum));
  }
  return AttentionMap(std::vector<double>(weights.begin(), weights.end()));
}

AttentionMap normalize_attention(std::span<const double> raw) { return AttentionMap::normalize(raw); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimension, "cosine_similarity: lengths " + std::to_string(a.size()) +
                                           " and " + std::to_string(b.size()) + " differ");
  }
  if (a.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "cosine_similarity: empty vectors");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::kDegenerateInput, "cosine_similarity: zero-norm input");
  }
  const double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(sim, -1.0, 1.0);
}

double cosine_similarity(const AttentionMap& a, const AttentionMap& b) {
  return cosine_similarity(a.weights(), b.weights());
}

ProbabilityVector softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::kParameter, "softmax: temperature must be > 0");
  }
  if (logits.empty()) {
    throw Error(ErrorKind::kDimension, "softmax: empty logits");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double l : logits) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorKind::kValidation, "softmax: NaN or +inf logit");
    }
    max_logit = std::max(max_logit, l);
  }
  if (!std::isfinite(max_logit)) {
    throw Error(ErrorKind::kDecoding, "softmax: every logit is -inf");
  }
  ProbabilityVector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::isfinite(logits[i]) ? std::exp((logits[i] - max_logit) / temperature) : 0.0;
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

double entropy(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0 || std::isnan(p)) {
      throw Error(ErrorKind::kDomain, "entropy: negative probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-4) {
    throw Error(ErrorKind::kDomain, "entropy: probabilities sum to " + std::to_string(total));
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void require_finite(std::span<const double> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::kValidation,
                  std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

std::string_view label_name(MentionLabel label) {
  switch (label) {
    case MentionLabel::kGrounded: return "grounded";
    case MentionLabel::kHallucinated: return "hallucinated";
    case MentionLabel::kUnknown: break;
  }
  return "unknown";
}

MentionLabel parse_label(std::string_view name) {
  if (name == "grounded") return MentionLabel::kGrounded;
  if (name == "hallucinated") return MentionLabel::kHallucinated;
  if (name == "unknown") return MentionLabel::kUnknown;
  throw Error(ErrorKind::kValidation, "unknown mention label '" + std::string(name) + "'");
}

std::string GenerationRecord::text() const {
  std::string out;
  for (const auto& piece : response_pieces) out += piece;
  return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kParameter, "Rng::index: empty range");
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace ccdkit
