// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// JSON forms of the stage outputs. Every reader accepts what the matching
// writer produces; unknown keys are ignored.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ccdkit/analysis.hpp"
#include "ccdkit/cct.hpp"
#include "ccdkit/core.hpp"
#include "ccdkit/detection.hpp"
#include "ccdkit/induction.hpp"
#include "ccdkit/metrics.hpp"

namespace ccdkit {

void to_json(nlohmann::json& j, const ObjectMention& m);
void from_json(const nlohmann::json& j, ObjectMention& m);
void to_json(nlohmann::json& j, const GenerationRecord& r);
void from_json(const nlohmann::json& j, GenerationRecord& r);

namespace induction {
void to_json(nlohmann::json& j, const EeResponse& r);
void from_json(const nlohmann::json& j, EeResponse& r);
void to_json(nlohmann::json& j, const Reference& r);
void from_json(const nlohmann::json& j, Reference& r);
}  // namespace induction

namespace detection {
void to_json(nlohmann::json& j, const DetectionReport& r);
void from_json(const nlohmann::json& j, DetectionReport& r);
void to_json(nlohmann::json& j, const DetectorMetrics& m);
}  // namespace detection

namespace cct {
void to_json(nlohmann::json& j, const CctSequence& s);
void from_json(const nlohmann::json& j, CctSequence& s);
}  // namespace cct

namespace metrics {
void to_json(nlohmann::json& j, const ChairResult& r);
void to_json(nlohmann::json& j, const AmberResult& r);
}  // namespace metrics

namespace analysis {
void to_json(nlohmann::json& j, const PoscoreHistogram& h);
void to_json(nlohmann::json& j, const RepetitionStats& s);
}  // namespace analysis

namespace io {

// Finite doubles as numbers, anything else as null.
nlohmann::json number_or_null(double v);

/// Writes `j` with two-space indentation and a trailing newline, creating
/// parent directories.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace io
}  // namespace ccdkit
