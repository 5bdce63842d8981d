// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "ccdkit/backend.hpp"
#include "ccdkit/core.hpp"
#include "ccdkit/error.hpp"
#include "ccdkit/extraction.hpp"
#include "ccdkit/synth.hpp"

namespace ccdkit::testing {

inline std::filesystem::path asset(const std::string& rel) { return std::filesystem::path(CCDKIT_ASSET_DIR) / rel; }

inline std::filesystem::path golden(const std::string& rel) { return std::filesystem::path(CCDKIT_GOLDEN_DIR) / rel; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(CCDKIT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline synth::SyntheticWorld world() { return synth::SyntheticWorld::load(asset("synthetic/world.json")); }

inline extraction::Lexicon lexicon() { return extraction::Lexicon::load(asset("synthetic/lexicon.json")); }

inline extraction::AnnotationSet annotations(const extraction::Lexicon& lex) {
  return extraction::AnnotationSet::load(asset("synthetic/annotations.json"), lex);
}

inline std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}


// Logits drawn from a hash of the whole request, so any change to the
// context or the span changes them. Token 0 is the image, 1 closes the
// turn, 2 is EOS.
class HashBackend : public Backend {
 public:
  explicit HashBackend(std::size_t vocab = 32, std::size_t patches = 8, bool attention = true)
      : vocab_(vocab), patches_(patches), attention_(attention) {}

  // Fail every step after `n` successful ones.
  void fail_after(std::size_t n) { fail_after_ = n; }
  std::size_t steps() const { return steps_; }

  BackendSession open_session(const std::string&, const std::string& image_ref) override {
    BackendSession s;
    s.session_id = "hash";
    s.image_ref = image_ref;
    s.vocab_size = vocab_;
    s.patch_count = patches_;
    s.supports_attention = attention_;
    s.can_encode = true;
    s.eos_id = 2;
    s.image_prefix = std::vector<TokenId>{0};
    s.turn_suffix = {1};
    return s;
  }

  StepResponse step(const BackendSession& session, const StepRequest& request) override {
    validate_step_request(session, request);
    if (fail_after_ && steps_ >= *fail_after_) throw Error(ErrorKind::kTransport, "injected failure");
    ++steps_;
    std::uint64_t h = fnv1a64(session.image_ref);
    for (TokenId t : request.context_tokens) h = mix64(h ^ static_cast<std::uint64_t>(t));
    if (request.cct_span) h = mix64(h ^ (request.cct_span->first * 7919 + request.cct_span->second));
    Rng rng(h);
    StepResponse r;
    r.logits = uniform_vector(rng, vocab_, -5.0, 5.0);
    if (request.want_attention && attention_) r.attention = uniform_vector(rng, patches_, 0.1, 1.0);
    r.image_attention_ratio = rng.uniform();
    return r;
  }

  std::vector<TokenId> encode(const BackendSession&, const std::string& text) override {
    std::vector<TokenId> ids;
    for (unsigned char c : text) ids.push_back(static_cast<TokenId>(3 + c % (vocab_ - 3)));
    return ids;
  }

  std::vector<std::string> decode_pieces(const BackendSession&, std::span<const TokenId> ids) override {
    std::vector<std::string> out;
    for (TokenId id : ids) out.push_back(" t" + std::to_string(id));
    return out;
  }

 private:
  std::size_t vocab_;
  std::size_t patches_;
  bool attention_;
  std::optional<std::size_t> fail_after_;
  std::atomic<std::size_t> steps_{0};
};

}  // namespace ccdkit::testing
