// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/wire.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <map>

#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ccdkit/error.hpp"

namespace ccdkit::wire {

using nlohmann::json;

namespace {

[[noreturn]] void transport_failure(const std::string& what) {
  throw Error(ErrorKind::kTransport, what + ": " + std::strerror(errno));
}

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

std::vector<double> number_array(const json& frame, const char* key) {
  const json& arr = frame.at(key);
  if (!arr.is_array()) throw Error(ErrorKind::kProtocol, std::string(key) + " is not an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number()) throw Error(ErrorKind::kProtocol, std::string(key) + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<TokenId> id_array(const json& arr, const char* what) {
  if (!arr.is_array()) throw Error(ErrorKind::kProtocol, std::string(what) + " is not an array");
  std::vector<TokenId> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number_integer()) throw Error(ErrorKind::kProtocol, std::string(what) + " holds a non-integer");
    out.push_back(v.get<TokenId>());
  }
  return out;
}

ErrorKind kind_from_wire(const std::string& kind) {
  if (kind == "not_found") return ErrorKind::kNotFound;
  if (kind == "validation") return ErrorKind::kValidation;
  return ErrorKind::kInternal;
}

std::string kind_to_wire(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kValidation: return "validation";
    default: return "internal";
  }
}

}  // namespace

FdTransport::FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
  ignore_sigpipe();
}

FdTransport::~FdTransport() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

void FdTransport::send_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_failure("write");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdTransport::receive_line() {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_failure("read");
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      return std::exchange(buffer_, {});
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ProcessTransport::ProcessTransport(const std::string& command) {
  ignore_sigpipe();
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) transport_failure("pipe");
  if (::pipe(from_child) != 0) transport_failure("pipe");
  pid_ = ::fork();
  if (pid_ < 0) transport_failure("fork");
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  channel_ = std::make_unique<FdTransport>(from_child[0], to_child[1]);
}

ProcessTransport::~ProcessTransport() {
  channel_.reset();
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

std::unique_ptr<Transport> connect_unix_socket(const std::filesystem::path& path) {
  ignore_sigpipe();
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) transport_failure("socket");
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string p = path.string();
  if (p.size() >= sizeof addr.sun_path) {
    ::close(fd);
    throw Error(ErrorKind::kTransport, "socket path too long: " + p);
  }
  std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    transport_failure("connect " + p);
  }
  const int write_fd = ::dup(fd);
  return std::make_unique<FdTransport>(fd, write_fd);
}

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_channel_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) transport_failure("socketpair");
  return {std::make_unique<FdTransport>(fds[0], ::dup(fds[0])),
          std::make_unique<FdTransport>(fds[1], ::dup(fds[1]))};
}

RecordingTransport::RecordingTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& transcript)
    : inner_(std::move(inner)), out_(std::fopen(transcript.string().c_str(), "w")) {
  if (!out_) transport_failure("open transcript " + transcript.string());
}

RecordingTransport::~RecordingTransport() {
  if (out_) std::fclose(out_);
}

void RecordingTransport::send_line(const std::string& line) {
  {
    std::lock_guard lock(mutex_);
    std::fprintf(out_, "> %s\n", line.c_str());
    std::fflush(out_);
  }
  inner_->send_line(line);
}

std::optional<std::string> RecordingTransport::receive_line() {
  auto line = inner_->receive_line();
  if (line) {
    std::lock_guard lock(mutex_);
    std::fprintf(out_, "< %s\n", line->c_str());
    std::fflush(out_);
  }
  return line;
}

json step_request_frame(const std::string& session_id, const StepRequest& request) {
  json frame = {{"op", "step"},
                {"session", session_id},
                {"context", request.context_tokens},
                {"want_attention", request.want_attention}};
  frame["cct_span"] = request.cct_span ? json::array({request.cct_span->first, request.cct_span->second})
                                       : json(nullptr);
  return frame;
}

StepRequest parse_step_request(const json& frame) {
  StepRequest req;
  req.context_tokens = id_array(frame.at("context"), "context");
  req.want_attention = frame.value("want_attention", false);
  const json& span = frame.value("cct_span", json(nullptr));
  if (!span.is_null()) {
    auto index = [](const json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
    if (!span.is_array() || span.size() != 2 || !index(span[0]) || !index(span[1])) {
      throw Error(ErrorKind::kValidation, "cct_span must be [start, end]");
    }
    req.cct_span = TokenSpan{span[0].get<std::size_t>(), span[1].get<std::size_t>()};
  }
  return req;
}

json step_response_frame(const StepResponse& response) {
  json frame = {{"ok", true}, {"logits", response.logits}};
  frame["attention"] = response.attention ? json(*response.attention) : json(nullptr);
  frame["image_attention_ratio"] =
      response.image_attention_ratio ? json(*response.image_attention_ratio) : json(nullptr);
  return frame;
}

StepResponse parse_step_response(const json& frame) {
  validate_response_frame(frame, "step");
  StepResponse resp;
  resp.logits = number_array(frame, "logits");
  if (!frame.at("attention").is_null()) resp.attention = number_array(frame, "attention");
  if (frame.contains("image_attention_ratio") && !frame["image_attention_ratio"].is_null()) {
    resp.image_attention_ratio = frame["image_attention_ratio"].get<double>();
  }
  return resp;
}

json session_frame(const BackendSession& session) {
  json frame = {{"ok", true},
                {"proto", kProtocolVersion},
                {"session", session.session_id},
                {"vocab_size", session.vocab_size},
                {"patch_count", session.patch_count},
                {"supports_attention", session.supports_attention},
                {"can_encode", session.can_encode},
                {"eos_id", session.eos_id},
                {"turn_suffix", session.turn_suffix}};
  frame["image_prefix"] = session.image_prefix ? json(*session.image_prefix) : json(nullptr);
  return frame;
}

BackendSession parse_session(const json& frame, const std::string& image_ref) {
  validate_response_frame(frame, "open");
  if (frame.contains("proto") && frame["proto"] != kProtocolVersion) {
    throw Error(ErrorKind::kProtocol, "server speaks protocol " + frame["proto"].dump() + ", expected 1");
  }
  BackendSession s;
  s.session_id = frame.at("session").get<std::string>();
  s.image_ref = image_ref;
  s.vocab_size = frame.at("vocab_size").get<std::size_t>();
  s.patch_count = frame.at("patch_count").get<std::size_t>();
  s.supports_attention = frame.at("supports_attention").get<bool>();
  s.can_encode = frame.value("can_encode", false);
  s.eos_id = frame.value("eos_id", TokenId{0});
  if (frame.contains("image_prefix") && !frame["image_prefix"].is_null()) {
    s.image_prefix = id_array(frame["image_prefix"], "image_prefix");
  }
  if (frame.contains("turn_suffix")) s.turn_suffix = id_array(frame["turn_suffix"], "turn_suffix");
  return s;
}

json error_frame(const std::string& kind, const std::string& message) {
  return {{"ok", false}, {"error", {{"kind", kind}, {"msg", message}}}};
}

void validate_response_frame(const json& frame, const std::string& op) {
  auto fail = [&](const std::string& msg) { throw Error(ErrorKind::kProtocol, op + " response: " + msg); };
  if (!frame.is_object()) fail("frame is not an object");
  if (!frame.contains("ok") || !frame["ok"].is_boolean()) fail("missing boolean 'ok'");
  if (!frame["ok"].get<bool>()) {
    const json& err = frame.value("error", json(nullptr));
    if (!err.is_object() || !err.contains("kind") || !err["kind"].is_string()) fail("malformed error object");
    const std::string kind = err["kind"];
    if (kind != "not_found" && kind != "validation" && kind != "internal") fail("unknown error kind '" + kind + "'");
    return;
  }
  auto require = [&](const char* key, auto pred, const char* type) {
    if (!frame.contains(key) || !pred(frame[key])) fail(std::string("'") + key + "' must be " + type);
  };
  auto is_array_of_numbers = [](const json& v) {
    if (!v.is_array()) return false;
    for (const json& x : v) {
      if (!x.is_number()) return false;
    }
    return true;
  };
  auto is_array_of_ints = [](const json& v) {
    if (!v.is_array()) return false;
    for (const json& x : v) {
      if (!x.is_number_integer()) return false;
    }
    return true;
  };
  if (op == "open") {
    require("session", [](const json& v) { return v.is_string(); }, "a string");
    require("vocab_size", [](const json& v) { return v.is_number_integer() && v.get<std::int64_t>() > 0; },
            "a positive integer");
    require("patch_count", [](const json& v) { return v.is_number_integer() && v.get<std::int64_t>() > 0; },
            "a positive integer");
    require("supports_attention", [](const json& v) { return v.is_boolean(); }, "a boolean");
  } else if (op == "step") {
    require("logits", is_array_of_numbers, "an array of numbers");
    if (frame["logits"].empty()) fail("'logits' is empty");
    require("attention", [&](const json& v) { return v.is_null() || is_array_of_numbers(v); },
            "null or an array of numbers");
    if (frame.contains("image_attention_ratio")) {
      const json& r = frame["image_attention_ratio"];
      if (!r.is_null() && !r.is_number()) fail("'image_attention_ratio' must be null or a number");
    }
    if (frame["attention"].is_array()) {
      for (const json& w : frame["attention"]) {
        if (w.get<double>() < 0.0) fail("negative attention weight");
      }
    }
  } else if (op == "encode") {
    require("ids", is_array_of_ints, "an array of integers");
  } else if (op == "decode") {
    require("pieces", [](const json& v) {
      if (!v.is_array()) return false;
      for (const json& x : v) {
        if (!x.is_string()) return false;
      }
      return true;
    }, "an array of strings");
  } else {
    fail("unknown op");
  }
}

WireBackend::WireBackend(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

json WireBackend::exchange(const json& request) {
  std::lock_guard lock(mutex_);
  transport_->send_line(request.dump());
  auto line = transport_->receive_line();
  if (!line) throw Error(ErrorKind::kTransport, "backend closed the connection");
  json frame;
  try {
    frame = json::parse(*line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kProtocol, std::string("malformed frame: ") + e.what());
  }
  validate_response_frame(frame, request.at("op").get<std::string>());
  if (!frame["ok"].get<bool>()) {
    const json& err = frame["error"];
    throw Error(kind_from_wire(err["kind"].get<std::string>()), err.value("msg", std::string("backend error")));
  }
  return frame;
}

BackendSession WireBackend::open_session(const std::string& model, const std::string& image_ref) {
  const json frame = exchange({{"op", "open"}, {"model", model}, {"image", image_ref}, {"proto", kProtocolVersion}});
  return parse_session(frame, image_ref);
}

StepResponse WireBackend::step(const BackendSession& session, const StepRequest& request) {
  validate_step_request(session, request);
  StepResponse response = parse_step_response(exchange(step_request_frame(session.session_id, request)));
  validate_step_response(session, request, response);
  return response;
}

std::vector<TokenId> WireBackend::encode(const BackendSession& session, const std::string& text) {
  if (!session.can_encode) {
    throw Error(ErrorKind::kCapability, "backend does not offer the encode frame");
  }
  const json frame = exchange({{"op", "encode"}, {"session", session.session_id}, {"text", text}});
  return id_array(frame["ids"], "ids");
}

std::vector<std::string> WireBackend::decode_pieces(const BackendSession& session, std::span<const TokenId> ids) {
  const json frame = exchange({{"op", "decode"},
                               {"session", session.session_id},
                               {"ids", std::vector<TokenId>(ids.begin(), ids.end())}});
  auto pieces = frame["pieces"].get<std::vector<std::string>>();
  if (pieces.size() != ids.size()) throw Error(ErrorKind::kProtocol, "decode returned wrong piece count");
  return pieces;
}

json handle_frame(Backend& backend, std::map<std::string, BackendSession>& sessions, const json& request) {
  try {
    if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
      return error_frame("validation", "request lacks 'op'");
    }
    const std::string op = request["op"];
    if (op == "open") {
      if (request.value("proto", 0) != kProtocolVersion) {
        return error_frame("validation", "unsupported protocol version");
      }
      BackendSession s = backend.open_session(request.value("model", std::string()), request.at("image").get<std::string>());
      json frame = session_frame(s);
      sessions[s.session_id] = std::move(s);
      return frame;
    }
    auto it = sessions.find(request.value("session", std::string()));
    if (it == sessions.end()) return error_frame("not_found", "unknown session");
    const BackendSession& session = it->second;
    if (op == "step") {
      return step_response_frame(backend.step(session, parse_step_request(request)));
    }
    if (op == "encode") {
      return {{"ok", true}, {"ids", backend.encode(session, request.at("text").get<std::string>())}};
    }
    if (op == "decode") {
      const auto ids = id_array(request.at("ids"), "ids");
      return {{"ok", true}, {"pieces", backend.decode_pieces(session, ids)}};
    }
    return error_frame("validation", "unknown op '" + op + "'");
  } catch (const Error& e) {
    return error_frame(kind_to_wire(e.kind()), e.what());
  } catch (const json::exception& e) {
    return error_frame("validation", e.what());
  }
}

void serve(Backend& backend, Transport& transport) {
  std::map<std::string, BackendSession> sessions;
  while (auto line = transport.receive_line()) {
    if (line->empty()) continue;
    json response;
    try {
      response = handle_frame(backend, sessions, json::parse(*line));
    } catch (const json::exception& e) {
      response = error_frame("validation", std::string("malformed frame: ") + e.what());
    }
    transport.send_line(response.dump());
  }
}

}  // namespace ccdkit::wire
