// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Newline-delimited JSON protocol (version 1) for out-of-process backends.
//
//   -> {"op":"open","model":M,"image":I,"proto":1}
//   <- {"ok":true,"session":S,"vocab_size":V,"patch_count":P,
//       "supports_attention":B, ...extensions}
//   -> {"op":"step","session":S,"context":[ids],"cct_span":[s,e]|null,
//       "want_attention":B}
//   <- {"ok":true,"logits":[...],"attention":[...]|null,
//       "image_attention_ratio":R|null}
//   -> {"op":"encode","session":S,"text":T}       (when "can_encode")
//   <- {"ok":true,"ids":[...]}
//   -> {"op":"decode","session":S,"ids":[...]}
//   <- {"ok":true,"pieces":[...]}
//   <- {"ok":false,"error":{"kind":"not_found"|"validation"|"internal","msg":M}}
//
// Open-response extensions: "proto", "can_encode", "eos_id",
// "image_prefix" (token ids standing for the image; the contrastive span is
// spliced right after them) and "turn_suffix".

#include <filesystem>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdkit/backend.hpp"

namespace ccdkit::wire {

inline constexpr int kProtocolVersion = 1;

/// A bidirectional line channel.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(const std::string& line) = 0;
  // nullopt on orderly end of stream.
  virtual std::optional<std::string> receive_line() = 0;
};

/// Line channel over a pair of file descriptors. Owns and closes them.
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd);
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line() override;

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

/// Spawns `sh -c command` and talks to it over its stdin/stdout.
class ProcessTransport : public Transport {
 public:
  explicit ProcessTransport(const std::string& command);
  ~ProcessTransport() override;

  void send_line(const std::string& line) override { channel_->send_line(line); }
  std::optional<std::string> receive_line() override { return channel_->receive_line(); }

 private:
  std::unique_ptr<FdTransport> channel_;
  int pid_ = -1;
};

std::unique_ptr<Transport> connect_unix_socket(const std::filesystem::path& path);

// Two connected in-process endpoints (socketpair), for tests and embedding.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_channel_pair();

/// Wraps a transport and appends every frame, tagged by direction, to a
/// transcript file. Recorded transcripts drive bridge conformance replays.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& transcript);
  ~RecordingTransport() override;
  RecordingTransport(const RecordingTransport&) = delete;
  RecordingTransport& operator=(const RecordingTransport&) = delete;
  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line() override;

 private:
  std::unique_ptr<Transport> inner_;
  std::mutex mutex_;
  std::FILE* out_ = nullptr;
};

/// Backend client over a transport. One request is in flight at a time;
/// concurrent callers queue on an internal mutex.
class WireBackend : public Backend {
 public:
  explicit WireBackend(std::unique_ptr<Transport> transport);

  BackendSession open_session(const std::string& model, const std::string& image_ref) override;
  StepResponse step(const BackendSession& session, const StepRequest& request) override;
  std::vector<TokenId> encode(const BackendSession& session, const std::string& text) override;
  std::vector<std::string> decode_pieces(const BackendSession& session,
                                         std::span<const TokenId> ids) override;

 private:
  nlohmann::json exchange(const nlohmann::json& request);

  std::unique_ptr<Transport> transport_;
  std::mutex mutex_;
};

// Frame builders and parsers, shared by client and server.
nlohmann::json step_request_frame(const std::string& session_id, const StepRequest& request);
StepRequest parse_step_request(const nlohmann::json& frame);
nlohmann::json step_response_frame(const StepResponse& response);
StepResponse parse_step_response(const nlohmann::json& frame);
nlohmann::json session_frame(const BackendSession& session);
BackendSession parse_session(const nlohmann::json& frame, const std::string& image_ref);
nlohmann::json error_frame(const std::string& kind, const std::string& message);

/// Schema check for a response frame to the given op ("open", "step",
/// "encode", "decode"). Throws a protocol error on the first violation.
void validate_response_frame(const nlohmann::json& frame, const std::string& op);

/// Serves `backend` over `transport` until the peer closes the stream.
/// Each request line gets exactly one response line.
void serve(Backend& backend, Transport& transport);

// Handles one request frame; exposed for tests.
nlohmann::json handle_frame(Backend& backend, std::map<std::string, BackendSession>& sessions,
                            const nlohmann::json& request);

}  // namespace ccdkit::wire
