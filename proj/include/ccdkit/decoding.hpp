// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccdkit/backend.hpp"
#include "ccdkit/core.hpp"
#include "ccdkit/error.hpp"

namespace ccdkit::decoding {

enum class Strategy { kGreedy, kNucleus, kBeam };
// Which distribution the plausibility cut is measured against.
enum class TruncationReference { kBase, kCombined };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
TruncationReference parse_truncation_reference(std::string_view name);
std::string_view truncation_reference_name(TruncationReference r);

struct DecodingConfig {
  Strategy strategy = Strategy::kGreedy;
  double temperature = 1.0;
  double top_p = 1.0;
  std::size_t beam_size = 5;
  std::size_t max_new_tokens = 512;
  double alpha = 1.0;
  double beta = 0.1;
  std::uint64_t seed = 0;
  TruncationReference truncation_reference = TruncationReference::kBase;

  // Throws a parameter error on out-of-range values.
  void validate() const;
};

/// (1 + alpha) * base - alpha * contrast, elementwise.
LogitVector combine_contrastive(std::span<const double> base, std::span<const double> contrast, double alpha);

/// Sets combined[i] to -inf wherever reference_probs[i] < beta * max(reference_probs).
/// The reference argmax always survives because beta < 1.
LogitVector plausibility_truncate(std::span<const double> reference_probs, std::span<const double> combined,
                                  double beta);

/// Prompt text and its token ids as the backend encoded them.
struct Prompt {
  std::string text;
  std::vector<TokenId> ids;
};

// Full context for a branch: image prefix, prompt, turn suffix, response.
std::vector<TokenId> assemble_context(const BackendSession& session, std::span<const TokenId> prompt_ids,
                                      std::span<const TokenId> response);

struct StepResult {
  ProbabilityVector distribution;
  LogitVector base_logits;
  std::optional<AttentionMap> attention;
  std::optional<double> image_attention_ratio;
};

/// One contrastive-contextual step. Queries the base branch and, when the
/// contrastive tokens are non-empty and alpha > 0, the same backend again
/// with the tokens spliced in after the image. Otherwise the result is the
/// plain tempered softmax of the base branch.
StepResult ccd_step(Backend& backend, const BackendSession& session, std::span<const TokenId> prompt_ids,
                    std::span<const TokenId> response, std::span<const TokenId> cct_tokens,
                    const DecodingConfig& cfg, bool want_attention);

// Smallest probability-sorted prefix reaching top_p (boundary token
// included), renormalized. Ties in probability keep the lower index first.
std::vector<std::pair<TokenId, double>> nucleus_support(std::span<const double> dist, double top_p);

/// Greedy: argmax, lowest index on ties. Nucleus: sample from
/// nucleus_support. Beam is handled by generate(), not here.
TokenId select_token(std::span<const double> dist, const DecodingConfig& cfg, Rng& rng);

class PartialGenerationError : public Error {
 public:
  PartialGenerationError(GenerationRecord partial, const std::string& cause)
      : Error(ErrorKind::kPartialGeneration, cause), partial_(std::move(partial)) {}
  const GenerationRecord& partial() const noexcept { return partial_; }

 private:
  GenerationRecord partial_;
};

/// Autoregressive loop until EOS or max_new_tokens. `forced_prefix` is an
/// already-fixed start of the response (teacher forced); the returned
/// record holds only the tokens generated after it. Per-step statistics
/// come from the base branch.
GenerationRecord generate(Backend& backend, const BackendSession& session, const Prompt& prompt,
                          std::span<const TokenId> cct_tokens, const DecodingConfig& cfg,
                          std::span<const TokenId> forced_prefix = {});

}  // namespace ccdkit::decoding
