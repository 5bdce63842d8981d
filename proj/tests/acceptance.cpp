// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ccdkit/analysis.hpp"
#include "ccdkit/config.hpp"
#include "ccdkit/decoding.hpp"
#include "ccdkit/detection.hpp"
#include "ccdkit/metrics.hpp"
#include "ccdkit/pipeline.hpp"
#include "ccdkit/prompts.hpp"
#include "ccdkit/serialize.hpp"
#include "support.hpp"

using namespace ccdkit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kExact = 1e-12;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

config::RunConfig synthetic_config(const fs::path& out) {
  const fs::path a(CCDKIT_ASSET_DIR);
  const std::string text = "schema_version = 1\nseed = 1234\noutput_dir = \"" + out.string() + "\"\n[backend]\nworld = \"" +
                           (a / "synthetic/world.json").string() + "\"\n[data]\nlexicon = \"" +
                           (a / "synthetic/lexicon.json").string() + "\"\nannotations = \"" +
                           (a / "synthetic/annotations.json").string() +
                           "\"\n[decoding]\nalpha = 1.0\nbeta = 0.1\n[detection]\ntheta_ig = 0.75\ntheta_ee = 1\n"
                           "[cct]\nn_slots = 10\n";
  return config::RunConfig::from_document(config::Document::parse(text), out);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = testing::slurp(e.path());
  }
  return out;
}

double fraction(const std::string& s) {
  const auto slash = s.find('/');
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

Verdict combine_oracle() {
  Verdict v;
  Rng rng(101);
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    const auto base = testing::uniform_vector(rng, n, -20, 20);
    const auto contrast = testing::uniform_vector(rng, n, -20, 20);
    const double alpha = 5.0 * rng.uniform();
    const auto got = decoding::combine_contrastive(base, contrast, alpha);
    v.require(got.size() == n, "length mismatch");
    for (std::size_t i = 0; i < n && i < got.size(); ++i) {
      const double want = (1.0 + alpha) * base[i] - alpha * contrast[i];
      v.require(std::abs(got[i] - want) <= kExact, "value mismatch at trial " + std::to_string(trial));
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 1.0, "took " + std::to_string(secs) + " s");
  return v;
}

Verdict degeneracy() {
  Verdict v;
  synth::SyntheticBackend backend(testing::world());
  Rng rng(202);
  const auto vocab = backend.open_session("m", "img-1").vocab_size;
  const std::vector<std::string> images{"img-1", "img-2", "img-3", "img-4", "img-5", "img-6", "img-7", "img-8"};
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = backend.open_session("m", images[rng.index(images.size())]);
    std::vector<TokenId> prompt, response, cct;
    for (std::size_t i = 0, n = 1 + rng.index(6); i < n; ++i) prompt.push_back(static_cast<TokenId>(rng.index(vocab)));
    for (std::size_t i = 0, n = rng.index(12); i < n; ++i) response.push_back(static_cast<TokenId>(rng.index(vocab)));
    for (std::size_t i = 0, n = 1 + rng.index(6); i < n; ++i) cct.push_back(static_cast<TokenId>(rng.index(vocab)));
    decoding::DecodingConfig cfg;
    cfg.temperature = 0.5 + rng.uniform();
    const auto base =
        backend.step(s, StepRequest{decoding::assemble_context(s, prompt, response), std::nullopt, false}).logits;
    const auto vanilla = softmax(base, cfg.temperature);
    cfg.alpha = 0.0;
    const auto a0 = decoding::ccd_step(backend, s, prompt, response, cct, cfg, false).distribution;
    cfg.alpha = 1.0;
    const auto empty = decoding::ccd_step(backend, s, prompt, response, {}, cfg, false).distribution;
    for (std::size_t i = 0; i < vanilla.size(); ++i) {
      v.require(std::abs(a0[i] - vanilla[i]) <= kExact, "alpha = 0 differs at trial " + std::to_string(trial));
      v.require(std::abs(empty[i] - vanilla[i]) <= kExact, "empty cct differs at trial " + std::to_string(trial));
    }
  }
  return v;
}

Verdict truncation() {
  Verdict v;
  Rng rng(303);
  const double beta = 0.1;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    const auto logits = testing::uniform_vector(rng, n, -8, 8);
    const auto p = softmax(logits, 1.0);
    const auto combined = testing::uniform_vector(rng, n, -5, 5);
    const auto got = decoding::plausibility_truncate(p, combined, beta);
    double top = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] > top) {
        top = p[i];
        argmax = i;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool want = p[i] >= beta * top;
      const bool kept = std::isfinite(got[i]);
      v.require(kept == want, "surviving set differs at trial " + std::to_string(trial));
      if (kept) v.require(got[i] == combined[i], "kept logit changed at trial " + std::to_string(trial));
    }
    v.require(std::isfinite(got[argmax]), "argmax dropped at trial " + std::to_string(trial));
  }
  return v;
}

Verdict detector_oracle() {
  Verdict v;
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(49);
    std::vector<std::pair<double, int>> pts;
    const std::size_t levels = 1 + rng.index(12);
    for (std::size_t i = 0; i < n; ++i) {
      pts.emplace_back(static_cast<double>(rng.index(levels)) / 3.0, rng.uniform() < 0.5 ? 1 : 0);
    }
    pts[0].second = 1;
    pts[1].second = 0;

    std::vector<double> pos, neg;
    for (const auto& [s, l] : pts) (l ? pos : neg).push_back(s);
    double wins = 0.0;
    for (double a : pos) {
      for (double b : neg) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    const double auroc = wins / static_cast<double>(pos.size() * neg.size());
    std::set<double> ts;
    for (const auto& pt : pts) ts.insert(pt.first);
    ts.insert(-std::numeric_limits<double>::infinity());
    double f1max = 0.0;
    for (double t : ts) {
      double tp = 0, fp = 0;
      for (const auto& [s, l] : pts) {
        if (s > t) (l ? tp : fp) += 1.0;
      }
      const double fn = static_cast<double>(pos.size()) - tp;
      f1max = std::max(f1max, 2 * tp / (2 * tp + fp + fn));
    }

    const auto got = detection::evaluate_detector(pts);
    v.require(std::abs(got.auroc - auroc) <= kExact, "auroc differs at trial " + std::to_string(trial));
    v.require(std::abs(got.f1_max - f1max) <= kExact, "f1max differs at trial " + std::to_string(trial));
  }
  return v;
}

Verdict formula_fixtures() {
  Verdict v;
  auto record = [](std::size_t n) {
    GenerationRecord r;
    r.response_tokens.assign(n, 0);
    return r;
  };
  auto mention = [](std::size_t begin, std::size_t end) {
    ObjectMention m;
    m.canonical_id = "o";
    m.begin = begin;
    m.end = end;
    return m;
  };
  v.require(detection::poscore(mention(0, 1), record(100)) == 0.01, "poscore first token");
  v.require(detection::poscore(mention(99, 100), record(100)) == 1.0, "poscore final token");
  v.require(detection::poscore(mention(49, 51), record(100)) == 0.5, "poscore span [49,51)");

  using Sets = std::vector<std::vector<std::set<std::string>>>;
  const auto all = analysis::repetition_stats(Sets{{{"a"}, {"a"}, {"a"}, {"a"}, {"a"}}});
  v.require(all.n[4] == 5.0 && all.r[4] == 1.0, "repetition: one object in all sets");
  const auto once = analysis::repetition_stats(Sets{{{"a"}, {"b"}, {}, {}, {}}});
  v.require(once.n[0] == 2.0 && once.r[0] == 1.0, "repetition: two objects once each");
  const auto mixed = analysis::repetition_stats(Sets{{{"a", "b"}, {"a", "c"}, {"a"}, {}, {}}});
  v.require(mixed.n[2] == 3.0 && mixed.n[0] == 2.0 && mixed.r[2] == 0.6, "repetition: mixed fixture");

  auto responses = [](int imagination, int reason) {
    std::vector<induction::EeResponse> out(8);
    for (int d = 0; d < 8; ++d) {
      if (d < imagination) out[d].imagination.insert("o");
      if (d < reason) out[d].reason.insert("o");
    }
    return out;
  };
  v.require(detection::ee_score("o", responses(0, 0)) == 0, "ee_score: no set");
  v.require(detection::ee_score("o", responses(3, 1)) == 2, "ee_score: 3 imagination, 1 reason");
  v.require(detection::ee_score("o", responses(8, 8)) == 0, "ee_score: cancellation");
  return v;
}

Verdict synthetic_detection() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto dir = testing::scratch("acceptance_detection");
  const auto cfg = synthetic_config(dir);
  auto res = pipeline::open_resources(cfg);
  pipeline::Pipeline p(cfg, res);
  std::vector<GenerationRecord> captions;
  std::vector<detection::DetectionReport> reports;
  for (const auto& id : res.samples) {
    captions.push_back(p.caption(id, res.prompts.caption));
    reports.push_back(p.detect(captions.back(), p.induce(captions.back())));
  }
  const auto ev = p.evaluate(captions, {}, reports);
  double ig = -1.0, ee = -1.0;
  for (const auto& [name, m] : ev.detectors) {
    if (name == "ig_score" && m) ig = m->auroc;
    if (name == "ee_score" && m) ee = m->auroc;
  }
  const double secs = seconds_since(t0);
  v.detail = "ig auroc " + std::to_string(ig) + ", ee auroc " + std::to_string(ee);
  v.pass = ig == 1.0 && ee >= 0.95 && secs < 10.0;
  if (secs >= 10.0) v.detail += ", took " + std::to_string(secs) + " s";
  return v;
}

Verdict synthetic_suppression() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto dir = testing::scratch("acceptance_suppression");
  const auto cfg = synthetic_config(dir);
  auto res = pipeline::open_resources(cfg);
  pipeline::Pipeline p(cfg, res);
  const auto outcome = p.run(pipeline::Stage::kAll, 1);
  const double secs = seconds_since(t0);
  if (!outcome.failures.empty()) return {false, "run failed: " + outcome.failures.front().message};
  const json summary = io::read_json(dir / "summary.json");
  const double vanilla = summary["vanilla"]["chair"]["chair_s"];
  const double ccd = summary["ccd"]["chair"]["chair_s"];
  const auto grounded_v = summary["grounded_objects_mentioned"]["vanilla"].get<long>();
  const auto grounded_c = summary["grounded_objects_mentioned"]["ccd"].get<long>();
  const double reduction = vanilla > 0.0 ? (vanilla - ccd) / vanilla : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "chair_s %.4f -> %.4f (%.1f%% lower), grounded %ld -> %ld, %.2f s", vanilla, ccd,
                100.0 * reduction, grounded_v, grounded_c, secs);
  v.detail = buf;
  v.pass = vanilla > 0.0 && reduction >= 0.5 && grounded_v - grounded_c <= 1 && secs < 30.0;
  return v;
}

Verdict chair_goldens() {
  Verdict v;
  for (const char* name : {"chair_3sample.json", "amber_4sample.json"}) {
    const json toy = json::parse(testing::slurp(testing::asset(std::string("toy/") + name)));
    std::vector<metrics::CaptionEval> evals;
    for (const auto& s : toy["samples"]) {
      GenerationRecord rec;
      rec.sample_id = s["id"];
      rec.response_tokens.assign(s["length"].get<std::size_t>(), 0);
      for (const auto& id : s["mentions"]) {
        ObjectMention m;
        m.canonical_id = id;
        rec.mentions.push_back(m);
      }
      extraction::SampleAnnotation truth;
      for (const auto& id : s["ground_truth"]) truth.objects.insert(id.get<std::string>());
      if (s.contains("hallucination_targets")) {
        truth.hallucination_targets = s["hallucination_targets"].get<std::set<std::string>>();
      }
      evals.push_back(metrics::caption_eval(rec, truth));
    }
    const auto c = metrics::chair(evals);
    const auto& want = toy["expected"]["chair"];
    const std::vector<std::pair<double, std::string>> got{{c.chair_s, "chair_s"}, {c.chair_i, "chair_i"},
                                                          {c.precision, "precision"}, {c.recall, "recall"},
                                                          {c.f1, "f1"}, {c.len, "len"}};
    for (const auto& [value, key] : got) {
      v.require(std::abs(value - fraction(want[key])) <= kExact, std::string(name) + " " + key);
    }
    if (toy["expected"].contains("amber")) {
      const auto a = metrics::amber_generative(evals);
      const auto& wa = toy["expected"]["amber"];
      v.require(std::abs(a.chair - fraction(wa["chair"])) <= kExact, std::string(name) + " amber chair");
      v.require(std::abs(a.cover - fraction(wa["cover"])) <= kExact, std::string(name) + " cover");
      v.require(std::abs(a.hal - fraction(wa["hal"])) <= kExact, std::string(name) + " hal");
      v.require(a.cog && std::abs(*a.cog - fraction(wa["cog"])) <= kExact, std::string(name) + " cog");
    }
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  const auto a = testing::scratch("acceptance_det_a");
  const auto b = testing::scratch("acceptance_det_b");
  auto run = [](const fs::path& dir, std::size_t jobs) {
    const auto cfg = synthetic_config(dir);
    auto res = pipeline::open_resources(cfg);
    pipeline::Pipeline p(cfg, res);
    p.run(pipeline::Stage::kAll, jobs);
    p.analyze("poscore", jobs);
    p.analyze("repetition", jobs);
    return cfg.hash;
  };
  const auto ha = run(a, 1);
  const auto hb = run(b, 4);
  v.require(ha == hb, "config hashes differ");
  const auto sa = snapshot(a);
  const auto sb = snapshot(b);
  v.require(sa.size() > 30, "too few output files");
  v.require(sa == sb, "output bytes differ");
  v.detail = v.pass ? std::to_string(sa.size()) + " files identical" : v.detail;
  return v;
}

Verdict prompt_fidelity() {
  Verdict v;
  v.require(std::string(prompts::kCaption) == testing::slurp(testing::golden("prompts/caption.txt")), "caption prompt");
  v.require(std::string(prompts::kExternalExpansion) == testing::slurp(testing::golden("prompts/external_expansion.txt")),
            "external expansion prompt");
  const auto& t = prompts::enrichment_templates();
  v.require(t.size() == 3, "enrichment template count");
  for (std::size_t i = 0; i < t.size() && i < 3; ++i) {
    v.require(t[i].text == testing::slurp(testing::golden("prompts/enrichment_" + std::to_string(i) + ".txt")),
              "enrichment template " + std::to_string(i));
  }
  const auto shipped = prompts::PromptSet::load(testing::asset("prompts/prompts_v1.json"));
  v.require(shipped.caption == prompts::kCaption, "shipped caption prompt");
  v.require(shipped.external_expansion == prompts::kExternalExpansion, "shipped external expansion prompt");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"contrastive combination matches scalar oracle (1000 instances, 1e-12, < 1 s)", combine_oracle},
      {"alpha = 0 and empty cct reduce to vanilla (100 contexts, 1e-12)", degeneracy},
      {"plausibility truncation equals brute-force set (1000 distributions, beta 0.1)", truncation},
      {"detector metrics match exhaustive oracle (500 instances, 1e-12)", detector_oracle},
      {"poscore, repetition and ee_score fixtures (exact)", formula_fixtures},
      {"synthetic detection: IG AUROC = 1, EE AUROC >= 0.95 (< 10 s)", synthetic_detection},
      {"synthetic suppression: CHAIR_S -50% or better, recall drop <= 1 object (< 30 s)", synthetic_suppression},
      {"CHAIR and AMBER golden corpora (1e-12)", chair_goldens},
      {"identical config and seed give byte-identical outputs", determinism},
      {"prompt texts match golden files byte for byte", prompt_fidelity},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %s%s%s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.empty() ? "" : "  -- ",
                v.detail.c_str());
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
