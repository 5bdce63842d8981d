// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccdkit/core.hpp"

namespace ccdkit {

// Half-open [first, second) range of context positions.
using TokenSpan = std::pair<std::size_t, std::size_t>;

struct BackendSession {
  std::string session_id;
  std::string image_ref;
  std::size_t vocab_size = 0;
  std::size_t patch_count = 0;
  bool supports_attention = false;
  bool can_encode = false;
  TokenId eos_id = 0;
  // Tokens standing in for the image. The contrastive context is spliced
  // in right after them; nullopt means the backend did not say where the
  // image ends.
  std::optional<std::vector<TokenId>> image_prefix;
  // Tokens closing the user turn and opening the assistant turn.
  std::vector<TokenId> turn_suffix;

  std::optional<std::size_t> image_boundary() const {
    if (!image_prefix) return std::nullopt;
    return image_prefix->size();
  }
};

struct StepRequest {
  std::vector<TokenId> context_tokens;
  std::optional<TokenSpan> cct_span;
  bool want_attention = false;
};

struct StepResponse {
  LogitVector logits;
  std::optional<std::vector<double>> attention;
  std::optional<double> image_attention_ratio;
};

/// What every generation backend provides. A session is driven by one
/// thread at a time; distinct sessions may be used concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendSession open_session(const std::string& model, const std::string& image_ref) = 0;
  virtual StepResponse step(const BackendSession& session, const StepRequest& request) = 0;
  virtual std::vector<TokenId> encode(const BackendSession& session, const std::string& text) = 0;
  // Surface piece for each id; concatenating pieces yields the decoded text.
  virtual std::vector<std::string> decode_pieces(const BackendSession& session,
                                                 std::span<const TokenId> ids) = 0;
};

// Checks shape and finiteness of a response against the session and request.
void validate_step_response(const BackendSession& session, const StepRequest& request,
                            const StepResponse& response);

// Checks token ids and cct span bounds of a request.
void validate_step_request(const BackendSession& session, const StepRequest& request);

}  // namespace ccdkit
