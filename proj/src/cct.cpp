// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/cct.hpp"

#include <algorithm>

#include "ccdkit/detection.hpp"
#include "ccdkit/error.hpp"

namespace ccdkit::cct {

std::string_view slot_source_name(SlotSource s) {
  switch (s) {
    case SlotSource::kIg: return "ig";
    case SlotSource::kEe: return "ee";
    case SlotSource::kPad: return "pad";
  }
  return "pad";
}

SlotSource parse_slot_source(std::string_view name) {
  if (name == "ig") return SlotSource::kIg;
  if (name == "ee") return SlotSource::kEe;
  if (name == "pad") return SlotSource::kPad;
  throw Error(ErrorKind::kValidation, "unknown cct slot source '" + std::string(name) + "'");
}

std::vector<std::string> CctSequence::objects() const {
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (const auto& s : slots) out.push_back(s.object);
  return out;
}

CctSequence build_cct(const detection::DetectionReport& report, const std::set<std::string>& seen,
                      const CctConfig& cfg, Rng& rng) {
  if (cfg.n_slots == 0) throw Error(ErrorKind::kParameter, "cct n_slots must be positive");
  auto provenance = [&](const std::string& id) -> const detection::Provenance* {
    auto it = report.provenance.find(id);
    return it == report.provenance.end() ? nullptr : &it->second;
  };

  std::vector<CctSlot> ig;
  for (const auto& id : report.s_ig) {
    const auto* p = provenance(id);
    CctSlot slot{id, SlotSource::kIg, p ? p->ig_similarity : std::nullopt, p ? p->ee_count : std::nullopt};
    ig.push_back(std::move(slot));
  }
  std::stable_sort(ig.begin(), ig.end(), [&](const CctSlot& a, const CctSlot& b) {
    const double sa = a.ig_similarity.value_or(0.0), sb = b.ig_similarity.value_or(0.0);
    if (sa != sb) return sa > sb;
    const auto* pa = provenance(a.object);
    const auto* pb = provenance(b.object);
    const double qa = pa && pa->poscore ? *pa->poscore : 1.0;
    const double qb = pb && pb->poscore ? *pb->poscore : 1.0;
    return qa < qb;
  });

  std::vector<CctSlot> ee;
  for (const auto& id : report.s_ee) {
    if (report.s_ig.count(id)) continue;
    const auto* p = provenance(id);
    ee.push_back({id, SlotSource::kEe, std::nullopt, p ? p->ee_count : std::nullopt});
  }
  rng.shuffle(ee);

  CctSequence seq;
  for (auto* group : {&ig, &ee}) {
    for (auto& slot : *group) {
      if (seq.slots.size() == cfg.n_slots) break;
      seq.slots.push_back(std::move(slot));
    }
  }

  if (seq.slots.size() < cfg.n_slots) {
    std::vector<std::string> pool;
    for (const auto& o : cfg.unrelated_pool) {
      if (seen.count(o) || report.s_induction.count(o)) continue;
      if (std::find(pool.begin(), pool.end(), o) == pool.end()) pool.push_back(o);
    }
    std::sort(pool.begin(), pool.end());
    const std::size_t need = cfg.n_slots - seq.slots.size();
    if (pool.size() < need) {
      throw Error(ErrorKind::kPadding, "unrelated pool short by " + std::to_string(need - pool.size()) +
                                           " object(s) for sample '" + report.sample_id + "'");
    }
    rng.shuffle(pool);
    for (std::size_t i = 0; i < need; ++i) seq.slots.push_back({pool[i], SlotSource::kPad, std::nullopt, std::nullopt});
  }

  for (std::size_t i = 0; i < seq.slots.size(); ++i) {
    if (i > 0) seq.text += cfg.separator;
    seq.text += seq.slots[i].object;
  }
  return seq;
}

void encode_cct(CctSequence& seq, Backend& backend, const BackendSession& session) {
  if (!session.can_encode) throw Error(ErrorKind::kCapability, "backend cannot encode contrastive tokens");
  seq.token_ids = backend.encode(session, seq.text);
}

CctInsertion insert_cct(std::span<const TokenId> context, std::optional<std::size_t> image_boundary,
                        std::span<const TokenId> cct) {
  CctInsertion out;
  out.context.assign(context.begin(), context.end());
  if (cct.empty()) return out;
  if (!image_boundary) throw Error(ErrorKind::kProtocol, "backend did not report where the image tokens end");
  if (*image_boundary > context.size()) throw Error(ErrorKind::kProtocol, "image boundary beyond the context");
  const auto at = out.context.begin() + static_cast<std::ptrdiff_t>(*image_boundary);
  out.context.insert(at, cct.begin(), cct.end());
  out.span = TokenSpan{*image_boundary, *image_boundary + cct.size()};
  return out;
}

}  // namespace ccdkit::cct
