// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/synth.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "ccdkit/error.hpp"

namespace ccdkit::synth {

using nlohmann::json;

namespace {

constexpr const char* kRequiredWords[] = {
    "<image>", "<assistant>", "<eos>", "<unk>", "\n", ".", ",", ":", "the", "image",
    "features", "a", "there", "is", "also", "and", "which", "suggests", "that",
    "imagination", "reason", "background", "imagine", "top", "bottom", "left", "right",
};

bool is_punct(char c) {
  return std::string_view(".,:;!?()\"'<>[]{}").find(c) != std::string_view::npos;
}

}  // namespace

SyntheticWorld SyntheticWorld::from_json(const json& j) {
  SyntheticWorld w;
  w.model = j.value("model", std::string("synthetic-lvlm"));
  w.vocab = j.at("vocab").get<std::vector<std::string>>();
  w.objects = j.at("objects").get<std::vector<std::string>>();
  w.patch_count = j.value("patch_count", std::size_t{16});
  w.hallucination_budget = j.value("hallucination_budget", std::size_t{2});
  w.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [id, img] : j.at("images").items()) {
    SyntheticImage image;
    image.grounded = img.at("grounded").get<std::vector<std::string>>();
    image.pool = img.at("pool").get<std::vector<std::string>>();
    for (const auto& [obj, patches] : img.at("regions").items()) {
      image.regions[obj] = patches.get<std::vector<std::size_t>>();
    }
    w.images.emplace(id, std::move(image));
  }
  w.validate();
  return w;
}

SyntheticWorld SyntheticWorld::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open world fixture " + path.string());
  json j;
  try {
    in >> j;
    return from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, "world fixture " + path.string() + ": " + e.what());
  }
}

json SyntheticWorld::to_json() const {
  json images_j = json::object();
  for (const auto& [id, img] : images) {
    json regions = json::object();
    for (const auto& [obj, patches] : img.regions) regions[obj] = patches;
    images_j[id] = {{"grounded", img.grounded}, {"pool", img.pool}, {"regions", regions}};
  }
  return {{"model", model},
          {"vocab", vocab},
          {"objects", objects},
          {"patch_count", patch_count},
          {"hallucination_budget", hallucination_budget},
          {"seed", seed},
          {"images", images_j}};
}

void SyntheticWorld::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kValidation, "synthetic world: " + msg); };
  std::set<std::string> words(vocab.begin(), vocab.end());
  if (words.size() != vocab.size()) fail("duplicate vocabulary entries");
  for (const char* w : kRequiredWords) {
    if (!words.count(w)) fail(std::string("vocabulary lacks '") + w + "'");
  }
  std::set<std::string> object_set(objects.begin(), objects.end());
  for (const auto& o : objects) {
    if (!words.count(o)) fail("object '" + o + "' not in vocabulary");
  }
  if (patch_count == 0) fail("patch_count must be positive");
  for (const auto& [id, img] : images) {
    std::set<std::string> grounded(img.grounded.begin(), img.grounded.end());
    std::vector<bool> used(patch_count, false);
    for (const auto& o : img.grounded) {
      if (!object_set.count(o)) fail(id + ": grounded '" + o + "' is not an object word");
      auto it = img.regions.find(o);
      if (it == img.regions.end() || it->second.empty()) fail(id + ": '" + o + "' has no region");
      for (std::size_t p : it->second) {
        if (p >= patch_count) fail(id + ": region patch out of range");
        if (used[p]) fail(id + ": overlapping regions at patch " + std::to_string(p));
        used[p] = true;
      }
    }
    for (const auto& o : img.pool) {
      if (!object_set.count(o)) fail(id + ": pool '" + o + "' is not an object word");
      if (grounded.count(o)) fail(id + ": '" + o + "' is both grounded and in the pool");
    }
  }
}

SyntheticBackend::SyntheticBackend(SyntheticWorld world) : world_(std::move(world)) {
  world_.validate();
  for (std::size_t i = 0; i < world_.vocab.size(); ++i) {
    ids_.emplace(world_.vocab[i], static_cast<TokenId>(i));
  }
  is_object_.assign(world_.vocab.size(), false);
  for (const auto& o : world_.objects) is_object_[static_cast<std::size_t>(ids_.at(o))] = true;
}

TokenId SyntheticBackend::token_id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? ids_.at("<unk>") : it->second;
}

const std::string& SyntheticBackend::token_text(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= world_.vocab.size()) {
    throw Error(ErrorKind::kValidation, "token id " + std::to_string(id) + " outside vocabulary");
  }
  return world_.vocab[static_cast<std::size_t>(id)];
}

std::vector<TokenId> SyntheticBackend::tokenize(const std::string& text) const {
  std::vector<TokenId> out;
  auto emit_chunk = [&](std::string chunk) {
    for (char& c : chunk) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t b = 0, e = chunk.size();
    while (b < e && is_punct(chunk[b])) out.push_back(token_id(std::string(1, chunk[b++])));
    std::vector<TokenId> trailing;
    while (e > b && is_punct(chunk[e - 1])) trailing.push_back(token_id(std::string(1, chunk[--e])));
    if (e > b) out.push_back(token_id(chunk.substr(b, e - b)));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  };
  std::string chunk;
  for (char c : text) {
    if (c == '\n') {
      if (!chunk.empty()) emit_chunk(std::exchange(chunk, {}));
      out.push_back(ids_.at("\n"));
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!chunk.empty()) emit_chunk(std::exchange(chunk, {}));
    } else {
      chunk.push_back(c);
    }
  }
  if (!chunk.empty()) emit_chunk(chunk);
  return out;
}

BackendSession SyntheticBackend::open_session(const std::string& /*model*/, const std::string& image_ref) {
  if (!world_.images.count(image_ref)) {
    throw Error(ErrorKind::kNotFound, "unknown image '" + image_ref + "'");
  }
  BackendSession s;
  s.session_id = "synth-" + std::to_string(++session_counter_);
  s.image_ref = image_ref;
  s.vocab_size = world_.vocab.size();
  s.patch_count = world_.patch_count;
  s.supports_attention = true;
  s.can_encode = true;
  s.eos_id = ids_.at("<eos>");
  s.image_prefix = std::vector<TokenId>{ids_.at("<image>")};
  s.turn_suffix = {ids_.at("<assistant>")};
  return s;
}

std::vector<TokenId> SyntheticBackend::encode(const BackendSession& /*session*/, const std::string& text) {
  return tokenize(text);
}

std::vector<std::string> SyntheticBackend::decode_pieces(const BackendSession& /*session*/,
                                                          std::span<const TokenId> ids) {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (TokenId id : ids) {
    const std::string& w = token_text(id);
    if (w == "<eos>") {
      pieces.emplace_back();
    } else if (w == "\n" || (w.size() == 1 && is_punct(w[0]))) {
      pieces.push_back(w);
    } else {
      pieces.push_back(" " + w);
    }
  }
  return pieces;
}

const SyntheticImage& SyntheticBackend::image_for(const BackendSession& session) const {
  auto it = world_.images.find(session.image_ref);
  if (it == world_.images.end()) {
    throw Error(ErrorKind::kNotFound, "unknown image '" + session.image_ref + "'");
  }
  return it->second;
}

std::vector<double> SyntheticBackend::dispersed_template(const std::string& image_ref) const {
  Rng rng(mix64(world_.seed ^ fnv1a64(image_ref)));
  std::vector<double> t(world_.patch_count);
  double sum = 0.0;
  for (double& x : t) {
    x = 1.0 + 0.2 * rng.uniform();
    sum += x;
  }
  for (double& x : t) x /= sum;
  return t;
}

LogitVector SyntheticBackend::base_logits(const SyntheticImage& image, const std::vector<TokenId>& visible,
                                          std::size_t response_begin) const {
  LogitVector logits(world_.vocab.size(), kFloorLogit);
  auto set = [&](const std::string& word, double value) { logits[static_cast<std::size_t>(ids_.at(word))] = value; };
  auto word_at = [&](std::size_t i) -> const std::string& { return world_.vocab[static_cast<std::size_t>(visible[i])]; };

  const std::size_t n = visible.size();
  const std::size_t rlen = n - response_begin;
  auto tail = [&](std::size_t back) -> std::string {
    return back < rlen ? word_at(n - 1 - back) : std::string();
  };

  bool imagine_mode = false;
  std::set<std::string> prompt_words;
  for (std::size_t i = 0; i < response_begin; ++i) prompt_words.insert(word_at(i));
  imagine_mode = prompt_words.count("imagine") > 0;

  const std::set<std::string> grounded(image.grounded.begin(), image.grounded.end());

  if (imagine_mode) {
    std::size_t direction = 0;
    const bool top = prompt_words.count("top"), bottom = prompt_words.count("bottom");
    const bool left = prompt_words.count("left"), right = prompt_words.count("right");
    if (top && left) direction = 4;
    else if (top && right) direction = 5;
    else if (bottom && left) direction = 6;
    else if (bottom && right) direction = 7;
    else if (left) direction = 2;
    else if (right) direction = 3;
    else if (bottom) direction = 1;
    std::string imagined = image.pool.empty() ? "background" : image.pool[direction % image.pool.size()];

    std::size_t newline = n;
    for (std::size_t i = response_begin; i < n; ++i) {
      if (word_at(i) == "\n") {
        newline = i;
        break;
      }
    }
    if (newline == n) {
      // Imagination line.
      switch (rlen) {
        case 0: set("imagination", kForcedLogit); break;
        case 1: set(":", kForcedLogit); break;
        case 2: set(imagined, kForcedLogit); break;
        default: set("\n", kForcedLogit); break;
      }
      return logits;
    }
    if (newline >= response_begin + 3) imagined = word_at(response_begin + 2);

    const std::size_t line_len = n - newline - 1;
    const std::string last = line_len > 0 ? word_at(n - 1) : std::string();
    const std::string prev = line_len > 1 ? word_at(n - 2) : std::string();
    const std::string prev2 = line_len > 2 ? word_at(n - 3) : std::string();
    std::set<std::string> listed;
    for (std::size_t i = newline + 1; i < n; ++i) listed.insert(word_at(i));
    auto next_unlisted = [&]() -> std::string {
      for (const auto& g : image.grounded) {
        if (!listed.count(g)) return g;
      }
      return {};
    };

    if (line_len == 0) set("reason", kForcedLogit);
    else if (last == "reason") set(":", kForcedLogit);
    else if (last == ":") set("the", kForcedLogit);
    else if (last == "the") set("image", kForcedLogit);
    else if (last == "image") set("features", kForcedLogit);
    else if (last == "features" || last == "and") set("a", kForcedLogit);
    else if (last == "a" && prev == "is") set(imagined, kForcedLogit);
    else if (last == "a") {
      const std::string g = next_unlisted();
      set(g.empty() ? "background" : g, kForcedLogit);
    } else if (prev == "a" && prev2 == "is") set(".", kForcedLogit);
    else if (prev == "a") set(next_unlisted().empty() ? "," : "and", kForcedLogit);
    else if (last == ",") set("which", kForcedLogit);
    else if (last == "which") set("suggests", kForcedLogit);
    else if (last == "suggests") set("that", kForcedLogit);
    else if (last == "that") set("there", kForcedLogit);
    else if (last == "there") set("is", kForcedLogit);
    else if (last == "is") set("a", kForcedLogit);
    else set("<eos>", kForcedLogit);
    return logits;
  }

  // Caption mode. Objects named anywhere in the visible context count as
  // described, so facts supplied in the prompt push the model towards the
  // pool sooner.
  std::set<std::string> described;
  for (std::size_t i = 0; i < response_begin; ++i) {
    if (is_object_[static_cast<std::size_t>(visible[i])]) described.insert(word_at(i));
  }
  auto exhausted = [&]() {
    return std::all_of(image.grounded.begin(), image.grounded.end(),
                       [&](const std::string& g) { return described.count(g) > 0; });
  };
  std::size_t extra_sentences = 0;
  bool sentence_is_extra = exhausted();
  for (std::size_t i = response_begin; i < n; ++i) {
    if (is_object_[static_cast<std::size_t>(visible[i])]) described.insert(word_at(i));
    if (word_at(i) == ".") {
      if (sentence_is_extra) ++extra_sentences;
      sentence_is_extra = exhausted();
    }
  }

  const std::string last = tail(0);
  const std::string prev = tail(1);

  auto pool_slot = [&](double lead) {
    bool first = true;
    double rank = 0.0;
    for (const auto& p : image.pool) {
      if (described.count(p)) {
        set(p, 0.5);
      } else if (first) {
        set(p, lead);
        first = false;
      } else {
        set(p, 1.5 - 0.1 * rank);
        rank += 1.0;
      }
    }
    set("background", first ? lead : 2.5);
  };

  if (rlen == 0) {
    set("the", kForcedLogit);
  } else if (last == "the") {
    set("image", kForcedLogit);
  } else if (last == "image") {
    set("features", kForcedLogit);
  } else if (last == "features" || last == "is" || last == "also") {
    set("a", kForcedLogit);
  } else if (last == "there") {
    set("is", kForcedLogit);
  } else if (last == "a" && prev == "also") {
    if (!image.pool.empty()) {
      pool_slot(2.5);
      set(image.pool.front(), 5.0);
    } else if (!image.grounded.empty()) {
      set("background", 2.5);
      set(image.grounded.front(), 5.0);
    } else {
      set("background", kForcedLogit);
    }
  } else if (last == "a") {
    std::vector<std::string> remaining;
    for (const auto& g : image.grounded) {
      if (!described.count(g)) remaining.push_back(g);
    }
    if (!remaining.empty()) {
      for (const auto& p : image.pool) set(p, 1.0);
      set("background", 0.0);
      for (std::size_t i = 0; i < remaining.size(); ++i) set(remaining[i], i == 0 ? kForcedLogit : 4.0);
    } else {
      pool_slot(3.0);
    }
  } else if (last == "." ) {
    const bool more = !exhausted() || extra_sentences < world_.hallucination_budget;
    set("there", more ? kForcedLogit : 2.0);
    set("<eos>", more ? 2.0 : kForcedLogit);
  } else {
    set(".", kForcedLogit);
  }
  return logits;
}

StepResponse SyntheticBackend::step(const BackendSession& session, const StepRequest& request) {
  validate_step_request(session, request);
  {
    std::lock_guard lock(log_mutex_);
    if (logging_) log_.push_back(request);
  }
  const SyntheticImage& image = image_for(session);

  // The model reads the context with the contrastive span removed; the span
  // only feeds the boost below.
  std::vector<TokenId> visible;
  std::vector<TokenId> cct;
  visible.reserve(request.context_tokens.size());
  for (std::size_t i = 0; i < request.context_tokens.size(); ++i) {
    const bool in_cct = request.cct_span && i >= request.cct_span->first && i < request.cct_span->second;
    (in_cct ? cct : visible).push_back(request.context_tokens[i]);
  }
  const TokenId assistant = ids_.at("<assistant>");
  std::size_t response_begin = 0;
  for (std::size_t i = visible.size(); i > 0; --i) {
    if (visible[i - 1] == assistant) {
      response_begin = i;
      break;
    }
  }

  StepResponse response;
  response.logits = base_logits(image, visible, response_begin);

  // What the model is about to say decides where it looks.
  const auto intended = static_cast<std::size_t>(
      std::max_element(response.logits.begin(), response.logits.end()) - response.logits.begin());
  const std::string& intended_word = world_.vocab[intended];

  for (TokenId id : cct) {
    if (is_object_[static_cast<std::size_t>(id)]) response.logits[static_cast<std::size_t>(id)] += kCctBoost;
  }

  std::uint64_t h = mix64(world_.seed ^ fnv1a64(session.image_ref));
  for (TokenId id : visible) h = mix64(h ^ static_cast<std::uint64_t>(id));
  Rng noise(h);
  const bool is_grounded = std::find(image.grounded.begin(), image.grounded.end(), intended_word) != image.grounded.end();
  const bool is_other_object = !is_grounded && is_object_[intended];

  if (request.want_attention) {
    std::vector<double> att(world_.patch_count);
    if (is_grounded) {
      const auto& region = image.regions.at(intended_word);
      const double outside = (1.0 - kRegionMass) / static_cast<double>(world_.patch_count - region.size());
      std::fill(att.begin(), att.end(), outside);
      for (std::size_t p : region) att[p] = kRegionMass / static_cast<double>(region.size());
    } else if (is_other_object) {
      att = dispersed_template(session.image_ref);
      for (double& w : att) w = std::max(0.0, w + kAttentionNoise * (2.0 * noise.uniform() - 1.0));
    } else {
      for (double& w : att) w = 1.0 + 0.5 * noise.uniform();
    }
    response.attention = std::move(att);
  }
  const double base_ratio = is_grounded ? 0.6 : (is_other_object ? 0.25 : 0.4);
  response.image_attention_ratio = base_ratio + 0.02 * (2.0 * noise.uniform() - 1.0);
  return response;
}

void SyntheticBackend::set_request_logging(bool enabled) {
  std::lock_guard lock(log_mutex_);
  logging_ = enabled;
  if (!enabled) log_.clear();
}

std::vector<StepRequest> SyntheticBackend::request_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

}  // namespace ccdkit::synth
