// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdkit/cct.hpp"
#include "ccdkit/config.hpp"
#include "ccdkit/detection.hpp"
#include "ccdkit/extraction.hpp"
#include "ccdkit/induction.hpp"
#include "ccdkit/metrics.hpp"
#include "ccdkit/prompts.hpp"

namespace ccdkit::pipeline {

/// Everything a run needs, loaded and checked before the first backend call.
struct Resources {
  std::unique_ptr<Backend> backend;
  extraction::Lexicon lexicon;
  extraction::AnnotationSet annotations;
  prompts::PromptSet prompts;
  std::vector<std::string> samples;
};

/// Loads data files first, then connects the backend. File problems raise
/// validation or not-found errors; an unreachable backend raises a
/// transport error.
Resources open_resources(const config::RunConfig& cfg);

enum class Stage { kCaption, kInduce, kDetect, kSuppress, kEval, kAll };
Stage parse_stage(std::string_view name);

struct SampleFailure {
  std::string sample_id;
  std::string stage;
  ErrorKind kind;
  std::string message;
};

struct Outcome {
  std::vector<SampleFailure> failures;
  std::vector<std::filesystem::path> written;
};

// Per-sample products of the stages.
struct InductionResult {
  std::optional<induction::Reference> reference;
  std::vector<induction::EeResponse> ee;
};

struct SuppressionResult {
  cct::CctSequence cct;
  GenerationRecord record;
};

class Pipeline {
 public:
  Pipeline(config::RunConfig cfg, Resources& resources);

  Outcome run(Stage stage, std::size_t jobs);
  Outcome analyze(const std::string& experiment, std::size_t jobs);

  // Single-sample stages, exposed for tests.
  GenerationRecord caption(const std::string& sample_id, const std::string& prompt_text) const;
  InductionResult induce(const GenerationRecord& record) const;
  detection::DetectionReport detect(const GenerationRecord& record, const InductionResult& induced) const;
  SuppressionResult suppress(const GenerationRecord& record, const InductionResult& induced,
                             const detection::DetectionReport& report) const;

  // Corpus-level results of the eval stage.
  struct Evaluation {
    metrics::ChairResult vanilla_chair;
    metrics::ChairResult suppressed_chair;
    metrics::AmberResult vanilla_amber;
    metrics::AmberResult suppressed_amber;
    std::vector<std::pair<std::string, std::optional<detection::DetectorMetrics>>> detectors;
    std::size_t vanilla_grounded = 0;
    std::size_t suppressed_grounded = 0;
  };
  Evaluation evaluate(const std::vector<GenerationRecord>& vanilla, const std::vector<GenerationRecord>& suppressed,
                      const std::vector<detection::DetectionReport>& reports) const;

  const config::RunConfig& config() const noexcept { return cfg_; }

 private:
  nlohmann::json meta() const;
  std::string csv_header() const;
  std::filesystem::path stage_file(const std::string& stage, const std::string& sample_id) const;
  GenerationRecord label(GenerationRecord rec) const;
  decoding::DecodingConfig sample_decoding(const std::string& sample_id) const;

  config::RunConfig cfg_;
  Resources& res_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results land by
/// index, so their order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ccdkit::pipeline
