// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/backend.hpp"

#include <cmath>

#include "ccdkit/error.hpp"

namespace ccdkit {

void validate_step_request(const BackendSession& session, const StepRequest& request) {
  for (std::size_t i = 0; i < request.context_tokens.size(); ++i) {
    const TokenId id = request.context_tokens[i];
    if (id < 0 || static_cast<std::size_t>(id) >= session.vocab_size) {
      throw Error(ErrorKind::kValidation, "token id " + std::to_string(id) + " at position " +
                                              std::to_string(i) + " outside vocabulary");
    }
  }
  if (request.cct_span) {
    const auto [begin, end] = *request.cct_span;
    if (begin > end || end > request.context_tokens.size()) {
      throw Error(ErrorKind::kValidation, "cct_span [" + std::to_string(begin) + "," +
                                              std::to_string(end) + ") outside context");
    }
  }
}

void validate_step_response(const BackendSession& session, const StepRequest& request,
                            const StepResponse& response) {
  if (response.logits.size() != session.vocab_size) {
    throw Error(ErrorKind::kProtocol, "logits length " + std::to_string(response.logits.size()) +
                                          " != vocab_size " + std::to_string(session.vocab_size));
  }
  for (double l : response.logits) {
    if (!std::isfinite(l)) throw Error(ErrorKind::kProtocol, "non-finite logit in response");
  }
  const bool expect_attention = request.want_attention && session.supports_attention;
  if (expect_attention != response.attention.has_value()) {
    throw Error(ErrorKind::kProtocol, expect_attention ? "attention missing from response"
                                                       : "attention present but not requested");
  }
  if (response.attention) {
    if (response.attention->size() != session.patch_count) {
      throw Error(ErrorKind::kProtocol, "attention length " +
                                            std::to_string(response.attention->size()) +
                                            " != patch_count " + std::to_string(session.patch_count));
    }
    for (double w : *response.attention) {
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorKind::kProtocol, "negative or non-finite attention weight");
      }
    }
  }
  if (response.image_attention_ratio) {
    const double r = *response.image_attention_ratio;
    if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
      throw Error(ErrorKind::kProtocol, "image_attention_ratio outside [0,1]");
    }
  }
}

}  // namespace ccdkit
