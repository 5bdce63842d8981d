// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "ccdkit/cct.hpp"
#include "ccdkit/detection.hpp"
#include "ccdkit/error.hpp"
#include "support.hpp"

using namespace ccdkit;
using namespace ccdkit::cct;
using detection::DetectionReport;

namespace {

const std::vector<std::string> kPool{"apple", "bag", "ball", "bowl", "car", "clock", "cup", "fork", "kite",
                                     "lamp", "pen", "sink", "spoon", "tie", "vase"};

DetectionReport report_with(std::map<std::string, double> ig, std::map<std::string, int> ee,
                            std::map<std::string, double> pos = {}) {
  DetectionReport r;
  r.sample_id = "s";
  for (const auto& [id, sim] : ig) {
    r.s_ig.insert(id);
    r.provenance[id].ig_similarity = sim;
  }
  for (const auto& [id, count] : ee) {
    r.s_ee.insert(id);
    r.provenance[id].ee_count = count;
  }
  for (const auto& [id, p] : pos) r.provenance[id].poscore = p;
  r.s_induction = r.s_ig;
  r.s_induction.insert(r.s_ee.begin(), r.s_ee.end());
  return r;
}

CctConfig config(std::size_t n, std::string sep = " ") {
  CctConfig c;
  c.n_slots = n;
  c.separator = std::move(sep);
  c.unrelated_pool = kPool;
  return c;
}

}  // namespace

TEST_CASE("IG slots come first, by similarity then position") {
  const auto r = report_with({{"dog", 0.8}, {"cat", 0.9}, {"bird", 0.8}}, {{"tree", 2}, {"cat", 3}},
                             {{"dog", 0.7}, {"bird", 0.2}, {"cat", 0.5}});
  Rng rng(1);
  const auto seq = build_cct(r, {}, config(4), rng);
  CHECK(seq.objects() == std::vector<std::string>{"cat", "bird", "dog", "tree"});
  CHECK(seq.slots[0].source == SlotSource::kIg);
  CHECK(seq.slots[0].ig_similarity == 0.9);
  CHECK(seq.slots[0].ee_count == 3);
  CHECK(seq.slots[3].source == SlotSource::kEe);
  CHECK(seq.slots[3].ee_count == 2);
  CHECK(seq.text == "cat bird dog tree");
  CHECK(seq.token_ids.empty());
}

TEST_CASE("truncation keeps the highest priorities") {
  const auto r = report_with({{"dog", 0.8}, {"cat", 0.9}}, {{"tree", 2}});
  Rng rng(1);
  CHECK(build_cct(r, {}, config(1), rng).objects() == std::vector<std::string>{"cat"});
}

TEST_CASE("padding skips seen and selected objects") {
  const auto r = report_with({{"kite", 0.9}}, {});
  Rng rng(5);
  const auto seq = build_cct(r, {"apple", "bag"}, config(5, ", "), rng);
  REQUIRE(seq.slots.size() == 5);
  CHECK(seq.slots[0].object == "kite");
  for (std::size_t i = 1; i < 5; ++i) {
    CHECK(seq.slots[i].source == SlotSource::kPad);
    CHECK(seq.slots[i].object != "apple");
    CHECK(seq.slots[i].object != "bag");
    CHECK(seq.slots[i].object != "kite");
  }
  CHECK(seq.text.find(", ") != std::string::npos);
}

TEST_CASE("a short pool is a padding error") {
  const auto r = report_with({}, {});
  CctConfig c = config(3);
  c.unrelated_pool = {"a", "b", "b"};
  Rng rng(0);
  try {
    build_cct(r, {}, c, rng);
    FAIL("expected a padding error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPadding);
  }
  c.n_slots = 0;
  CHECK_THROWS_AS(build_cct(r, {}, c, rng), Error);
}

TEST_CASE("cct sequences keep their invariants") {
  Rng gen(44);
  const std::vector<std::string> universe{"dog", "cat", "bird", "tree", "horse", "boat", "sofa", "chair", "cow"};
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, double> ig;
    std::map<std::string, int> ee;
    std::set<std::string> seen;
    for (const auto& u : universe) {
      const double x = gen.uniform();
      if (x < 0.25) ig[u] = 0.75 + 0.25 * std::floor(gen.uniform() * 4.0) / 4.0;
      if (x > 0.2 && x < 0.45) ee[u] = 2 + static_cast<int>(gen.index(6));
      if (gen.uniform() < 0.3) seen.insert(u);
    }
    for (const auto& p : kPool) {
      if (gen.uniform() < 0.2) seen.insert(p);
    }
    const auto r = report_with(ig, ee);
    const std::size_t n = 1 + gen.index(10);
    const std::uint64_t seed = gen.next();
    Rng rng(seed);
    CctSequence seq;
    try {
      seq = build_cct(r, seen, config(n), rng);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kPadding);
      continue;
    }
    CHECK(seq.slots.size() == n);
    std::set<std::string> distinct;
    int stage = 0;
    double last_sim = 2.0;
    for (const auto& s : seq.slots) {
      distinct.insert(s.object);
      const int rank = s.source == SlotSource::kIg ? 0 : (s.source == SlotSource::kEe ? 1 : 2);
      CHECK(rank >= stage);
      stage = rank;
      if (s.source == SlotSource::kIg) {
        CHECK(*s.ig_similarity <= last_sim);
        last_sim = *s.ig_similarity;
      }
      if (s.source == SlotSource::kPad) {
        CHECK_FALSE(seen.count(s.object));
        CHECK_FALSE(r.s_induction.count(s.object));
      } else {
        CHECK(r.s_induction.count(s.object));
      }
    }
    CHECK(distinct.size() == n);
    if (r.s_induction.size() >= n) CHECK(seq.slots.back().source != SlotSource::kPad);

    Rng again(seed);
    CHECK(build_cct(r, seen, config(n), again) == seq);
  }
}

TEST_CASE("slot source names round-trip") {
  for (auto s : {SlotSource::kIg, SlotSource::kEe, SlotSource::kPad}) CHECK(parse_slot_source(slot_source_name(s)) == s);
  CHECK_THROWS_AS(parse_slot_source("x"), Error);
}

TEST_CASE("encoding uses the backend tokenizer") {
  synth::SyntheticBackend b(testing::world());
  const auto s = b.open_session("m", "img-1");
  CctSequence seq;
  seq.text = "kite, person";
  encode_cct(seq, b, s);
  CHECK(seq.token_ids == std::vector<TokenId>{b.token_id("kite"), b.token_id(","), b.token_id("person")});
  BackendSession mute = s;
  mute.can_encode = false;
  try {
    encode_cct(seq, b, mute);
    FAIL("expected a capability error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapability);
  }
}

TEST_CASE("insertion splices after the image tokens") {
  const std::vector<TokenId> ctx{100, 101, 7, 8, 9};
  const std::vector<TokenId> cct{50, 51};
  const auto ins = insert_cct(ctx, 2, cct);
  CHECK(ins.context == std::vector<TokenId>{100, 101, 50, 51, 7, 8, 9});
  CHECK(ins.span == TokenSpan{2, 4});
  const auto none = insert_cct(ctx, 2, {});
  CHECK(none.context == ctx);
  CHECK_FALSE(none.span.has_value());
  CHECK_NOTHROW(insert_cct(ctx, std::nullopt, {}));
  try {
    insert_cct(ctx, std::nullopt, cct);
    FAIL("expected a protocol error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProtocol);
  }
  CHECK_THROWS_AS(insert_cct(ctx, 9, cct), Error);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> c, t;
    for (std::size_t i = 0, n = rng.index(20); i < n; ++i) c.push_back(static_cast<TokenId>(rng.index(50)));
    for (std::size_t i = 0, n = 1 + rng.index(8); i < n; ++i) t.push_back(static_cast<TokenId>(100 + rng.index(50)));
    const std::size_t at = rng.index(c.size() + 1);
    const auto got = insert_cct(c, at, t);
    REQUIRE(got.span.has_value());
    CHECK(got.context.size() == c.size() + t.size());
    // Removing the span restores the original context.
    std::vector<TokenId> removed(got.context.begin(), got.context.begin() + static_cast<std::ptrdiff_t>(got.span->first));
    removed.insert(removed.end(), got.context.begin() + static_cast<std::ptrdiff_t>(got.span->second), got.context.end());
    CHECK(removed == c);
    CHECK(std::vector<TokenId>(got.context.begin() + static_cast<std::ptrdiff_t>(got.span->first),
                               got.context.begin() + static_cast<std::ptrdiff_t>(got.span->second)) == t);
  }
}

TEST_CASE("twelve candidates keep every IG item and two drawn EE items") {
  std::map<std::string, double> ig;
  const std::vector<std::string> ig_ids{"i0", "i1", "i2", "i3", "i4", "i5", "i6", "i7"};
  for (std::size_t k = 0; k < ig_ids.size(); ++k) ig[ig_ids[k]] = 0.99 - 0.02 * static_cast<double>(k);
  const std::map<std::string, int> ee{{"e0", 2}, {"e1", 3}, {"e2", 2}, {"e3", 4}};
  const auto r = report_with(ig, ee);
  std::set<std::string> drawn_pairs;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto seq = build_cct(r, {}, config(10), rng);
    REQUIRE(seq.slots.size() == 10);
    for (std::size_t k = 0; k < 8; ++k) CHECK(seq.slots[k].object == ig_ids[k]);
    CHECK(seq.slots[8].source == SlotSource::kEe);
    CHECK(seq.slots[9].source == SlotSource::kEe);
    CHECK(seq.slots[8].object != seq.slots[9].object);
    drawn_pairs.insert(seq.slots[8].object + seq.slots[9].object);
    Rng again(seed);
    CHECK(build_cct(r, {}, config(10), again) == seq);
  }
  // The draw depends on the seed.
  CHECK(drawn_pairs.size() > 1);
}

TEST_CASE("an exact fit needs no padding") {
  const auto r = report_with({{"dog", 0.8}}, {{"tree", 2}, {"cat", 1}});
  Rng rng(2);
  const auto seq = build_cct(r, {}, config(3), rng);
  for (const auto& s : seq.slots) CHECK(s.source != SlotSource::kPad);
  const auto objects = seq.objects();
  CHECK(std::set<std::string>(objects.begin(), objects.end()) == r.s_induction);
}
