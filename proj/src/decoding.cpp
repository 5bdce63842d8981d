// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccdkit/cct.hpp"

namespace ccdkit::decoding {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kGreedy: return "greedy";
    case Strategy::kNucleus: return "nucleus";
    case Strategy::kBeam: return "beam";
  }
  return "greedy";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "greedy") return Strategy::kGreedy;
  if (name == "nucleus") return Strategy::kNucleus;
  if (name == "beam") return Strategy::kBeam;
  throw Error(ErrorKind::kParameter, "unknown decoding strategy '" + std::string(name) + "'");
}

TruncationReference parse_truncation_reference(std::string_view name) {
  if (name == "base") return TruncationReference::kBase;
  if (name == "combined") return TruncationReference::kCombined;
  throw Error(ErrorKind::kParameter, "unknown truncation reference '" + std::string(name) + "'");
}

std::string_view truncation_reference_name(TruncationReference r) {
  return r == TruncationReference::kBase ? "base" : "combined";
}

void DecodingConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kParameter, msg); };
  if (!(temperature > 0.0)) fail("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) fail("top_p must lie in (0, 1]");
  if (beam_size == 0) fail("beam_size must be positive");
  if (max_new_tokens == 0) fail("max_new_tokens must be positive");
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) fail("beta must lie in [0, 1)");
}

LogitVector combine_contrastive(std::span<const double> base, std::span<const double> contrast, double alpha) {
  if (base.size() != contrast.size()) {
    throw Error(ErrorKind::kDimension, "combine_contrastive: branch lengths differ");
  }
  LogitVector out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = (1.0 + alpha) * base[i] - alpha * contrast[i];
  }
  return out;
}

LogitVector plausibility_truncate(std::span<const double> reference_probs, std::span<const double> combined,
                                  double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorKind::kParameter, "plausibility_truncate: beta must lie in [0, 1)");
  }
  if (reference_probs.size() != combined.size()) {
    throw Error(ErrorKind::kDimension, "plausibility_truncate: lengths differ");
  }
  if (reference_probs.empty()) throw Error(ErrorKind::kDimension, "plausibility_truncate: empty input");
  const double cutoff = beta * *std::max_element(reference_probs.begin(), reference_probs.end());
  LogitVector out(combined.begin(), combined.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (reference_probs[i] < cutoff) out[i] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<TokenId> assemble_context(const BackendSession& session, std::span<const TokenId> prompt_ids,
                                      std::span<const TokenId> response) {
  std::vector<TokenId> ctx;
  if (session.image_prefix) ctx.insert(ctx.end(), session.image_prefix->begin(), session.image_prefix->end());
  ctx.insert(ctx.end(), prompt_ids.begin(), prompt_ids.end());
  ctx.insert(ctx.end(), session.turn_suffix.begin(), session.turn_suffix.end());
  ctx.insert(ctx.end(), response.begin(), response.end());
  return ctx;
}

StepResult ccd_step(Backend& backend, const BackendSession& session, std::span<const TokenId> prompt_ids,
                    std::span<const TokenId> response, std::span<const TokenId> cct_tokens,
                    const DecodingConfig& cfg, bool want_attention) {
  StepRequest base_req;
  base_req.context_tokens = assemble_context(session, prompt_ids, response);
  base_req.want_attention = want_attention && session.supports_attention;
  StepResponse base = backend.step(session, base_req);

  StepResult result;
  if (base.attention) result.attention = AttentionMap::normalize(*base.attention);
  result.image_attention_ratio = base.image_attention_ratio;

  if (cct_tokens.empty() || cfg.alpha == 0.0) {
    result.distribution = softmax(base.logits, cfg.temperature);
    result.base_logits = std::move(base.logits);
    return result;
  }

  const cct::CctInsertion inserted = cct::insert_cct(base_req.context_tokens, session.image_boundary(), cct_tokens);
  StepRequest contrast_req;
  contrast_req.context_tokens = inserted.context;
  contrast_req.cct_span = inserted.span;
  const StepResponse contrast = backend.step(session, contrast_req);

  const LogitVector combined = combine_contrastive(base.logits, contrast.logits, cfg.alpha);
  const ProbabilityVector reference =
      cfg.truncation_reference == TruncationReference::kBase ? softmax(base.logits) : softmax(combined);
  result.distribution = softmax(plausibility_truncate(reference, combined, cfg.beta), cfg.temperature);
  result.base_logits = std::move(base.logits);
  return result;
}

std::vector<std::pair<TokenId, double>> nucleus_support(std::span<const double> dist, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorKind::kParameter, "top_p must lie in (0, 1]");
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  std::vector<std::pair<TokenId, double>> support;
  double cumulative = 0.0;
  for (std::size_t i : order) {
    if (!(dist[i] > 0.0)) break;
    support.emplace_back(static_cast<TokenId>(i), dist[i]);
    cumulative += dist[i];
    if (cumulative >= top_p) break;
  }
  if (support.empty()) throw Error(ErrorKind::kDecoding, "distribution has empty support");
  for (auto& entry : support) entry.second /= cumulative;
  return support;
}

TokenId select_token(std::span<const double> dist, const DecodingConfig& cfg, Rng& rng) {
  if (dist.empty()) throw Error(ErrorKind::kDecoding, "empty distribution");
  if (cfg.strategy != Strategy::kNucleus) {
    const auto it = std::max_element(dist.begin(), dist.end());
    if (!(*it > 0.0)) throw Error(ErrorKind::kDecoding, "distribution has empty support");
    return static_cast<TokenId>(it - dist.begin());
  }
  const auto support = nucleus_support(dist, cfg.top_p);
  double u = rng.uniform();
  for (const auto& [id, p] : support) {
    if (u < p) return id;
    u -= p;
  }
  return support.back().first;
}

namespace {

struct Hypothesis {
  std::vector<TokenId> tokens;
  std::vector<StepStats> steps;
  std::vector<AttentionMap> attention;
  double score = 0.0;
  bool finished = false;
};

StepStats stats_of(const StepResult& r) {
  StepStats s;
  s.top_logit = *std::max_element(r.base_logits.begin(), r.base_logits.end());
  s.entropy = entropy(softmax(r.base_logits));
  s.image_attention_ratio = r.image_attention_ratio;
  return s;
}

void append_step(Hypothesis& h, const StepResult& r, TokenId token, TokenId eos) {
  if (token == eos) {
    h.finished = true;
    return;
  }
  h.tokens.push_back(token);
  h.steps.push_back(stats_of(r));
  if (r.attention) h.attention.push_back(*r.attention);
}

GenerationRecord to_record(Backend& backend, const BackendSession& session, const Prompt& prompt,
                           Hypothesis h) {
  GenerationRecord rec;
  rec.prompt = prompt.text;
  rec.prompt_tokens = prompt.ids;
  rec.response_pieces = h.tokens.empty() ? std::vector<std::string>{} : backend.decode_pieces(session, h.tokens);
  rec.response_tokens = std::move(h.tokens);
  rec.ended_with_eos = h.finished;
  rec.steps = std::move(h.steps);
  rec.attention_available = session.supports_attention && rec.response_tokens.size() == h.attention.size();
  if (rec.attention_available) rec.attention_maps = std::move(h.attention);
  return rec;
}

std::vector<TokenId> joined(std::span<const TokenId> forced, const std::vector<TokenId>& generated) {
  std::vector<TokenId> out(forced.begin(), forced.end());
  out.insert(out.end(), generated.begin(), generated.end());
  return out;
}

Hypothesis run_sampling(Backend& backend, const BackendSession& session, const Prompt& prompt,
                        std::span<const TokenId> cct_tokens, const DecodingConfig& cfg,
                        std::span<const TokenId> forced) {
  Rng rng(cfg.seed);
  Hypothesis h;
  for (std::size_t i = 0; i < cfg.max_new_tokens && !h.finished; ++i) {
    try {
      const StepResult r = ccd_step(backend, session, prompt.ids, joined(forced, h.tokens), cct_tokens, cfg, true);
      append_step(h, r, select_token(r.distribution, cfg, rng), session.eos_id);
    } catch (const Error& e) {
      throw PartialGenerationError(to_record(backend, session, prompt, h), e.what());
    }
  }
  return h;
}

Hypothesis run_beam(Backend& backend, const BackendSession& session, const Prompt& prompt,
                    std::span<const TokenId> cct_tokens, const DecodingConfig& cfg,
                    std::span<const TokenId> forced) {
  struct Candidate {
    double score;
    std::size_t parent;
    TokenId token;
  };
  std::vector<Hypothesis> alive(1);
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < cfg.max_new_tokens && !alive.empty(); ++step) {
    std::vector<StepResult> results;
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      try {
        results.push_back(
            ccd_step(backend, session, prompt.ids, joined(forced, alive[h].tokens), cct_tokens, cfg, true));
      } catch (const Error& e) {
        throw PartialGenerationError(to_record(backend, session, prompt, alive.front()), e.what());
      }
      const auto& dist = results.back().distribution;
      for (std::size_t t = 0; t < dist.size(); ++t) {
        if (dist[t] > 0.0) candidates.push_back({alive[h].score + std::log(dist[t]), h, static_cast<TokenId>(t)});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (candidates.size() > cfg.beam_size) candidates.resize(cfg.beam_size);
    if (candidates.empty()) throw Error(ErrorKind::kDecoding, "beam search ran out of candidates");

    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      Hypothesis h = alive[c.parent];
      append_step(h, results[c.parent], c.token, session.eos_id);
      h.score = c.score;
      (h.finished ? finished : next).push_back(std::move(h));
    }
    alive = std::move(next);
    if (!finished.empty() && !alive.empty()) {
      // Scores only fall as hypotheses grow, so a finished leader is final.
      const double best_finished =
          std::max_element(finished.begin(), finished.end(), [](const auto& a, const auto& b) {
            return a.score < b.score;
          })->score;
      if (best_finished >= alive.front().score) break;
    }
  }
  std::vector<Hypothesis> pool = std::move(finished);
  pool.insert(pool.end(), std::make_move_iterator(alive.begin()), std::make_move_iterator(alive.end()));
  auto best = std::max_element(pool.begin(), pool.end(),
                               [](const Hypothesis& a, const Hypothesis& b) { return a.score < b.score; });
  return std::move(*best);
}

}  // namespace

GenerationRecord generate(Backend& backend, const BackendSession& session, const Prompt& prompt,
                          std::span<const TokenId> cct_tokens, const DecodingConfig& cfg,
                          std::span<const TokenId> forced_prefix) {
  cfg.validate();
  if (prompt.ids.empty()) throw Error(ErrorKind::kValidation, "generate: prompt is empty");
  Hypothesis best = cfg.strategy == Strategy::kBeam
                        ? run_beam(backend, session, prompt, cct_tokens, cfg, forced_prefix)
                        : run_sampling(backend, session, prompt, cct_tokens, cfg, forced_prefix);
  return to_record(backend, session, prompt, std::move(best));
}

}  // namespace ccdkit::decoding
