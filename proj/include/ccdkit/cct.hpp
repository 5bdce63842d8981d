// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccdkit/backend.hpp"
#include "ccdkit/core.hpp"

namespace ccdkit::detection {
struct DetectionReport;
}

namespace ccdkit::cct {

struct CctConfig {
  std::size_t n_slots = 10;
  std::string separator = " ";
  // Padding candidates; objects seen anywhere in the sample are skipped.
  std::vector<std::string> unrelated_pool;
  std::uint64_t seed = 0;
};

enum class SlotSource { kIg, kEe, kPad };
std::string_view slot_source_name(SlotSource s);
SlotSource parse_slot_source(std::string_view name);

struct CctSlot {
  std::string object;
  SlotSource source = SlotSource::kPad;
  std::optional<double> ig_similarity;
  std::optional<int> ee_count;

  friend bool operator==(const CctSlot&, const CctSlot&) = default;
};

struct CctSequence {
  std::vector<CctSlot> slots;
  std::string text;
  std::vector<TokenId> token_ids;

  std::vector<std::string> objects() const;
  friend bool operator==(const CctSequence&, const CctSequence&) = default;
};

/// Truncates or pads the report's S_induction to exactly cfg.n_slots.
/// Priority: IG candidates by similarity (ties: earlier mention), then EE
/// candidates in an order drawn from `rng`. Pads are drawn from
/// cfg.unrelated_pool minus `seen` and the candidates. token_ids stay
/// empty; see encode_cct.
CctSequence build_cct(const detection::DetectionReport& report, const std::set<std::string>& seen,
                      const CctConfig& cfg, Rng& rng);

// Tokenizes seq.text with the backend's own encoder.
void encode_cct(CctSequence& seq, Backend& backend, const BackendSession& session);

struct CctInsertion {
  std::vector<TokenId> context;
  std::optional<TokenSpan> span;
};

/// Splices `cct` into `context` right after the image tokens. An empty
/// sequence leaves the context as is and yields no span.
CctInsertion insert_cct(std::span<const TokenId> context, std::optional<std::size_t> image_boundary,
                        std::span<const TokenId> cct);

}  // namespace ccdkit::cct
