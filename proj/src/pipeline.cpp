// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "ccdkit/analysis.hpp"
#include "ccdkit/error.hpp"
#include "ccdkit/serialize.hpp"
#include "ccdkit/synth.hpp"
#include "ccdkit/wire.hpp"

namespace ccdkit::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::unique_ptr<Backend> make_backend(const config::BackendSpec& spec) {
  if (spec.kind == "synthetic") {
    return std::make_unique<synth::SyntheticBackend>(synth::SyntheticWorld::load(spec.world));
  }
  std::unique_ptr<wire::Transport> transport;
  if (!spec.command.empty()) {
    transport = std::make_unique<wire::ProcessTransport>(spec.command);
  } else {
    transport = wire::connect_unix_socket(spec.socket);
  }
  if (spec.transcript) transport = std::make_unique<wire::RecordingTransport>(std::move(transport), *spec.transcript);
  return std::make_unique<wire::WireBackend>(std::move(transport));
}

}  // namespace

Resources open_resources(const config::RunConfig& cfg) {
  Resources r;
  r.lexicon = extraction::Lexicon::load(cfg.lexicon);
  r.annotations = extraction::AnnotationSet::load(cfg.annotations, r.lexicon);
  r.prompts = cfg.prompts ? prompts::PromptSet::load(*cfg.prompts) : prompts::PromptSet::builtin();
  r.samples = cfg.samples.empty() ? r.annotations.sample_ids() : cfg.samples;
  for (const auto& s : r.samples) {
    if (!r.annotations.contains(s)) throw Error(ErrorKind::kValidation, "sample '" + s + "' has no annotation");
  }
  for (const auto& o : cfg.cct.unrelated_pool) {
    if (!r.lexicon.contains(o)) throw Error(ErrorKind::kValidation, "cct.unrelated_pool entry '" + o + "' not in lexicon");
  }
  if (cfg.backend.kind == "synthetic" && !fs::exists(cfg.backend.world)) {
    throw Error(ErrorKind::kNotFound, "world fixture " + cfg.backend.world.string() + " does not exist");
  }
  r.backend = make_backend(cfg.backend);
  if (cfg.backend.kind == "wire" && !r.samples.empty()) {
    // Fail here rather than inside the first worker when nobody answers.
    r.backend->open_session(cfg.backend.model, r.samples.front());
  }
  return r;
}

Stage parse_stage(std::string_view name) {
  if (name == "caption") return Stage::kCaption;
  if (name == "induce") return Stage::kInduce;
  if (name == "detect") return Stage::kDetect;
  if (name == "suppress") return Stage::kSuppress;
  if (name == "eval") return Stage::kEval;
  if (name == "all") return Stage::kAll;
  throw Error(ErrorKind::kUsage, "unknown stage '" + std::string(name) + "'");
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

Pipeline::Pipeline(config::RunConfig cfg, Resources& resources) : cfg_(std::move(cfg)), res_(resources) {
  if (cfg_.induction.cue == prompts::kInductionCue) cfg_.induction.cue = res_.prompts.induction_cue;
  if (cfg_.cct.unrelated_pool.empty()) cfg_.cct.unrelated_pool = res_.lexicon.canonical_ids();
}

json Pipeline::meta() const { return {{"config_hash", cfg_.hash}, {"seed", cfg_.seed}}; }

std::string Pipeline::csv_header() const {
  return "# config_hash=" + cfg_.hash + " seed=" + std::to_string(cfg_.seed) + "\n";
}

fs::path Pipeline::stage_file(const std::string& stage, const std::string& sample_id) const {
  return cfg_.output_dir / stage / (sample_id + ".json");
}

GenerationRecord Pipeline::label(GenerationRecord rec) const {
  rec.mentions = extraction::label_mentions(extraction::extract_record_mentions(rec, res_.lexicon), res_.annotations,
                                            rec.sample_id);
  return rec;
}

decoding::DecodingConfig Pipeline::sample_decoding(const std::string& sample_id) const {
  decoding::DecodingConfig d = cfg_.decoding;
  d.seed = mix64(cfg_.seed ^ fnv1a64(sample_id));
  return d;
}

GenerationRecord Pipeline::caption(const std::string& sample_id, const std::string& prompt_text) const {
  Backend& backend = *res_.backend;
  const BackendSession session = backend.open_session(cfg_.backend.model, sample_id);
  const decoding::Prompt prompt{prompt_text, backend.encode(session, prompt_text)};
  GenerationRecord rec = decoding::generate(backend, session, prompt, {}, sample_decoding(sample_id));
  rec.sample_id = sample_id;
  return label(std::move(rec));
}

InductionResult Pipeline::induce(const GenerationRecord& record) const {
  Backend& backend = *res_.backend;
  const BackendSession session = backend.open_session(cfg_.backend.model, record.sample_id);
  InductionResult out;
  out.reference = induction::induce_reference(backend, session, record, res_.lexicon, cfg_.induction);
  if (out.reference) {
    out.reference->mention = extraction::label_mentions({out.reference->mention}, res_.annotations,
                                                        record.sample_id).front();
    out.reference->continuation.mentions = {out.reference->mention};
  }
  out.ee = induction::run_ee_protocol(backend, session, res_.prompts, res_.lexicon, cfg_.induction);
  return out;
}

detection::DetectionReport Pipeline::detect(const GenerationRecord& record, const InductionResult& induced) const {
  return detection::select_candidates(detection::score_sample(record, induced.reference, induced.ee), cfg_.detection);
}

SuppressionResult Pipeline::suppress(const GenerationRecord& record, const InductionResult& induced,
                                     const detection::DetectionReport& report) const {
  std::set<std::string> seen;
  for (const auto& m : record.mentions) seen.insert(m.canonical_id);
  for (const auto& r : induced.ee) {
    for (const auto& id : extraction::extract_objects(r.raw_text, res_.lexicon)) seen.insert(id);
  }
  Rng rng(mix64(cfg_.cct.seed ^ fnv1a64(record.sample_id)));
  SuppressionResult out;
  out.cct = cct::build_cct(report, seen, cfg_.cct, rng);

  Backend& backend = *res_.backend;
  const BackendSession session = backend.open_session(cfg_.backend.model, record.sample_id);
  cct::encode_cct(out.cct, backend, session);
  const decoding::Prompt prompt{record.prompt, record.prompt_tokens};
  GenerationRecord rec = decoding::generate(backend, session, prompt, out.cct.token_ids, sample_decoding(record.sample_id));
  rec.sample_id = record.sample_id;
  out.record = label(std::move(rec));
  return out;
}

Pipeline::Evaluation Pipeline::evaluate(const std::vector<GenerationRecord>& vanilla,
                                        const std::vector<GenerationRecord>& suppressed,
                                        const std::vector<detection::DetectionReport>& reports) const {
  Evaluation ev;
  auto evals = [&](const std::vector<GenerationRecord>& records, std::size_t& grounded) {
    std::vector<metrics::CaptionEval> out;
    for (const auto& r : records) {
      out.push_back(metrics::caption_eval(r, res_.annotations.at(r.sample_id)));
      for (const auto& id : out.back().mentioned) grounded += out.back().ground_truth.count(id);
    }
    return out;
  };
  const auto v = evals(vanilla, ev.vanilla_grounded);
  const auto s = evals(suppressed, ev.suppressed_grounded);
  ev.vanilla_chair = metrics::chair(v, cfg_.recall);
  ev.vanilla_amber = metrics::amber_generative(v);
  if (!s.empty()) {
    ev.suppressed_chair = metrics::chair(s, cfg_.recall);
    ev.suppressed_amber = metrics::amber_generative(s);
  }
  for (const auto& name : detection::detector_score_names()) {
    std::vector<std::pair<double, int>> scored;
    try {
      for (const auto& rep : reports) {
        for (const auto& m : rep.mentions) {
          if (m.mention.label == MentionLabel::kUnknown) continue;
          scored.emplace_back(detection::oriented_score(m, name), m.mention.label == MentionLabel::kHallucinated);
        }
      }
      ev.detectors.emplace_back(name, detection::evaluate_detector(scored));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUndefinedMetric && e.kind() != ErrorKind::kCapability) throw;
      ev.detectors.emplace_back(name, std::nullopt);
    }
  }
  return ev;
}

Outcome Pipeline::run(Stage stage, std::size_t jobs) {
  const bool all = stage == Stage::kAll;
  const bool do_caption = all || stage == Stage::kCaption;
  const bool do_induce = all || stage == Stage::kInduce;
  const bool do_detect = all || stage == Stage::kDetect;
  const bool do_suppress = all || stage == Stage::kSuppress;
  const bool do_eval = all || stage == Stage::kEval;
  const bool need_induce = do_detect || do_suppress;
  const bool need_report = do_suppress || do_eval;
  const bool need_suppressed = do_eval;

  const std::size_t n = res_.samples.size();
  std::vector<std::optional<GenerationRecord>> captions(n);
  std::vector<std::optional<InductionResult>> induced(n);
  std::vector<std::optional<detection::DetectionReport>> reports(n);
  std::vector<std::optional<SuppressionResult>> suppressed(n);
  std::vector<std::optional<SampleFailure>> failures(n);
  std::vector<std::vector<fs::path>> written(n);

  parallel_for(n, jobs, [&](std::size_t i) {
    const std::string& id = res_.samples[i];
    std::string current = "caption";
    try {
      if (do_caption) {
        captions[i] = caption(id, res_.prompts.caption);
        const auto path = stage_file("captions", id);
        io::write_json(path, {{"meta", meta()}, {"record", *captions[i]}});
        written[i].push_back(path);
      } else {
        captions[i] = io::read_json(stage_file("captions", id)).at("record").get<GenerationRecord>();
      }

      current = "induce";
      if (do_induce) {
        induced[i] = induce(*captions[i]);
        const auto path = stage_file("induce", id);
        io::write_json(path, {{"meta", meta()},
                              {"reference", induced[i]->reference ? json(*induced[i]->reference) : json(nullptr)},
                              {"ee", induced[i]->ee}});
        written[i].push_back(path);
      } else if (need_induce) {
        const json j = io::read_json(stage_file("induce", id));
        InductionResult r;
        if (!j.at("reference").is_null()) r.reference = j.at("reference").get<induction::Reference>();
        r.ee = j.at("ee").get<std::vector<induction::EeResponse>>();
        induced[i] = std::move(r);
      }

      current = "detect";
      if (do_detect) {
        reports[i] = detect(*captions[i], *induced[i]);
        const auto path = stage_file("detect", id);
        io::write_json(path, {{"meta", meta()}, {"report", *reports[i]}});
        written[i].push_back(path);
      } else if (need_report) {
        reports[i] = io::read_json(stage_file("detect", id)).at("report").get<detection::DetectionReport>();
      }

      current = "suppress";
      if (do_suppress) {
        suppressed[i] = suppress(*captions[i], *induced[i], *reports[i]);
        const auto path = stage_file("suppress", id);
        io::write_json(path, {{"meta", meta()}, {"cct", suppressed[i]->cct}, {"record", suppressed[i]->record}});
        written[i].push_back(path);
      } else if (need_suppressed) {
        const json j = io::read_json(stage_file("suppress", id));
        suppressed[i] = SuppressionResult{j.at("cct").get<cct::CctSequence>(), j.at("record").get<GenerationRecord>()};
      }
    } catch (const Error& e) {
      failures[i] = SampleFailure{id, current, e.kind(), e.what()};
    } catch (const std::exception& e) {
      failures[i] = SampleFailure{id, current, ErrorKind::kInternal, e.what()};
    }
  });

  Outcome outcome;
  for (std::size_t i = 0; i < n; ++i) {
    outcome.written.insert(outcome.written.end(), written[i].begin(), written[i].end());
    if (failures[i]) outcome.failures.push_back(*failures[i]);
  }

  if (do_eval) {
    std::vector<GenerationRecord> vanilla, sup;
    std::vector<detection::DetectionReport> reps;
    for (std::size_t i = 0; i < n; ++i) {
      if (failures[i]) continue;
      vanilla.push_back(*captions[i]);
      sup.push_back(suppressed[i]->record);
      reps.push_back(*reports[i]);
    }
    try {
      if (vanilla.empty()) throw Error(ErrorKind::kEmptyResult, "no sample finished all stages");
      const Evaluation ev = evaluate(vanilla, sup, reps);

      json detectors = json::object();
      std::string det_csv = csv_header() + "score,auroc,tpr_at_5fpr,f1_max,acc\n";
      for (const auto& [name, m] : ev.detectors) {
        detectors[name] = m ? json(*m) : json(nullptr);
        det_csv += name + "," +
                   (m ? fixed(m->auroc) + "," + fixed(m->tpr_at_5fpr) + "," + fixed(m->f1_max) + "," +
                            fixed(m->acc_at_f1max)
                      : std::string("n/a,n/a,n/a,n/a")) +
                   "\n";
      }
      auto chair_row = [&](const std::string& name, const metrics::ChairResult& c) {
        return name + "," + fixed(c.chair_s) + "," + fixed(c.chair_i) + "," + fixed(c.precision) + "," +
               fixed(c.recall) + "," + fixed(c.f1) + "," + fixed(c.len) + "\n";
      };
      auto amber_row = [&](const std::string& name, const metrics::AmberResult& a) {
        return name + "," + fixed(a.chair) + "," + fixed(a.cover) + "," + fixed(a.hal) + "," +
               (a.cog ? fixed(*a.cog) : std::string("n/a")) + "\n";
      };
      const std::string chair_csv = csv_header() + "decoding,chair_s,chair_i,precision,recall,f1,len\n" +
                                    chair_row("vanilla", ev.vanilla_chair) + chair_row("ccd", ev.suppressed_chair);
      const std::string amber_csv = csv_header() + "decoding,chair,cover,hal,cog\n" +
                                    amber_row("vanilla", ev.vanilla_amber) + amber_row("ccd", ev.suppressed_amber);

      const double reduction = ev.vanilla_chair.chair_s > 0.0
                                   ? (ev.vanilla_chair.chair_s - ev.suppressed_chair.chair_s) / ev.vanilla_chair.chair_s
                                   : 0.0;
      const json summary = {
          {"meta", meta()},
          {"samples", vanilla.size()},
          {"failed_samples", outcome.failures.size()},
          {"vanilla", {{"chair", ev.vanilla_chair}, {"amber", ev.vanilla_amber}}},
          {"ccd", {{"chair", ev.suppressed_chair}, {"amber", ev.suppressed_amber}}},
          {"chair_s_relative_reduction", reduction},
          {"grounded_objects_mentioned", {{"vanilla", ev.vanilla_grounded}, {"ccd", ev.suppressed_grounded}}},
          {"detection", detectors},
      };
      const fs::path dir = cfg_.output_dir / "eval";
      io::write_json(dir / "metrics.json", summary);
      io::write_text(dir / "chair.csv", chair_csv);
      io::write_text(dir / "amber.csv", amber_csv);
      io::write_text(dir / "detection.csv", det_csv);
      io::write_json(cfg_.output_dir / "summary.json", summary);
      for (const char* f : {"metrics.json", "chair.csv", "amber.csv", "detection.csv"}) outcome.written.push_back(dir / f);
      outcome.written.push_back(cfg_.output_dir / "summary.json");
    } catch (const Error& e) {
      outcome.failures.push_back({"*", "eval", e.kind(), e.what()});
    }
  }

  if (!outcome.failures.empty()) {
    json list = json::array();
    for (const auto& f : outcome.failures) {
      list.push_back({{"sample_id", f.sample_id},
                      {"stage", f.stage},
                      {"kind", std::string(error_kind_name(f.kind))},
                      {"message", f.message}});
    }
    io::write_json(cfg_.output_dir / "failures.json", {{"meta", meta()}, {"failures", list}});
  }
  return outcome;
}

Outcome Pipeline::analyze(const std::string& experiment, std::size_t jobs) {
  static const std::set<std::string> known = {"poscore", "similarity", "repetition", "enrichment"};
  if (!known.count(experiment)) {
    throw Error(ErrorKind::kUsage, "unknown experiment '" + experiment +
                                       "' (expected poscore, similarity, repetition or enrichment)");
  }
  Outcome outcome;
  const fs::path dir = cfg_.output_dir / "analysis";
  const std::size_t n = res_.samples.size();

  auto captions = [&](const std::string& prompt) {
    std::vector<GenerationRecord> records(n);
    parallel_for(n, jobs, [&](std::size_t i) { records[i] = caption(res_.samples[i], prompt); });
    return records;
  };

  if (experiment == "poscore") {
    const auto records = captions(res_.prompts.caption);
    const auto h = analysis::poscore_histogram(records, cfg_.analysis.bins);
    std::string csv = csv_header() + "bin_lo,bin_hi,class,frequency\n";
    for (const auto* cls : {"hallucinated", "grounded"}) {
      const auto& freq = std::string(cls) == "hallucinated" ? h.hallucinated : h.grounded;
      for (std::size_t b = 0; b < h.bins; ++b) {
        csv += fixed(static_cast<double>(b) / static_cast<double>(h.bins)) + "," +
               fixed(static_cast<double>(b + 1) / static_cast<double>(h.bins)) + "," + cls + "," + fixed(freq[b]) + "\n";
      }
    }
    io::write_text(dir / "poscore.csv", csv);
    io::write_json(dir / "poscore.json", {{"meta", meta()}, {"histogram", h}});
    outcome.written = {dir / "poscore.csv", dir / "poscore.json"};
  } else if (experiment == "similarity") {
    const auto records = captions(res_.prompts.caption);
    const auto sets = analysis::similarity_sets(records);
    std::string csv = csv_header() + "set,value\n";
    for (double v : sets.s_h) csv += "S_H," + fixed(v) + "\n";
    for (double v : sets.s_n) csv += "S_N," + fixed(v) + "\n";
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? json(nullptr) : json(s / static_cast<double>(v.size()));
    };
    io::write_text(dir / "similarity.csv", csv);
    io::write_json(dir / "similarity.json", {{"meta", meta()},
                                             {"s_h", {{"count", sets.s_h.size()}, {"mean", mean(sets.s_h)}}},
                                             {"s_n", {{"count", sets.s_n.size()}, {"mean", mean(sets.s_n)}}}});
    outcome.written = {dir / "similarity.csv", dir / "similarity.json"};
  } else if (experiment == "repetition") {
    const std::size_t k = cfg_.analysis.repetition_k;
    if (res_.prompts.repetition.size() < k) {
      throw Error(ErrorKind::kShape, "repetition needs " + std::to_string(k) + " prompts, the prompt set has " +
                                         std::to_string(res_.prompts.repetition.size()));
    }
    std::vector<std::vector<std::set<std::string>>> sets(n, std::vector<std::set<std::string>>(k));
    for (std::size_t j = 0; j < k; ++j) {
      const auto records = captions(res_.prompts.repetition[j]);
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& m : records[i].mentions) {
          if (m.label == MentionLabel::kHallucinated) sets[i][j].insert(m.canonical_id);
        }
      }
    }
    const auto stats = analysis::repetition_stats(sets, k, cfg_.analysis.repetition_distinct);
    std::string csv = csv_header() + "k,n,r\n";
    for (std::size_t i = 0; i < k; ++i) csv += std::to_string(i + 1) + "," + fixed(stats.n[i]) + "," + fixed(stats.r[i]) + "\n";
    io::write_text(dir / "repetition.csv", csv);
    io::write_json(dir / "repetition.json",
                   {{"meta", meta()}, {"distinct", cfg_.analysis.repetition_distinct}, {"stats", stats}});
    outcome.written = {dir / "repetition.csv", dir / "repetition.json"};
  } else {
    std::vector<analysis::EnrichmentSample> samples;
    std::size_t need = 0;
    for (const auto& t : res_.prompts.enrichment) need = std::max(need, t.sentences);
    for (const auto& id : res_.samples) {
      analysis::EnrichmentSample s{id, {}};
      for (const auto& o : res_.annotations.at(id).objects) s.sentences.push_back("There is a " + o + ".");
      while (s.sentences.size() < need) s.sentences.push_back("The picture is clear.");
      samples.push_back(std::move(s));
    }
    const auto levels = analysis::enrichment_experiment(*res_.backend, cfg_.backend.model, samples,
                                                        res_.prompts.enrichment, res_.lexicon, res_.annotations,
                                                        cfg_.decoding, cfg_.analysis.enrichment_averaging);
    std::string csv = csv_header() + "level,mean_poscore,count\n";
    json arr = json::array();
    for (const auto& l : levels) {
      csv += l.name + "," + fixed(l.mean_poscore) + "," + std::to_string(l.count) + "\n";
      arr.push_back({{"level", l.name}, {"mean_poscore", l.mean_poscore}, {"count", l.count}});
    }
    io::write_text(dir / "enrichment.csv", csv);
    io::write_json(dir / "enrichment.json", {{"meta", meta()}, {"levels", arr}});
    outcome.written = {dir / "enrichment.csv", dir / "enrichment.json"};
  }
  return outcome;
}

}  // namespace ccdkit::pipeline
