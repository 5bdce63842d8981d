// Copyright 2026 The ccdkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "ccdkit/analysis.hpp"

#include <algorithm>
#include <map>

#include "ccdkit/detection.hpp"
#include "ccdkit/error.hpp"

namespace ccdkit::analysis {

PoscoreHistogram poscore_histogram(std::span<const GenerationRecord> records, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::kParameter, "histogram needs at least one bin");
  PoscoreHistogram h;
  h.bins = bins;
  h.hallucinated.assign(bins, 0.0);
  h.grounded.assign(bins, 0.0);
  double sum_h = 0.0, sum_g = 0.0;
  for (const auto& rec : records) {
    for (const auto& m : rec.mentions) {
      if (m.label == MentionLabel::kUnknown) continue;
      const double p = detection::poscore(m, rec);
      const auto bin = std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
      if (m.label == MentionLabel::kHallucinated) {
        h.hallucinated[bin] += 1.0;
        sum_h += p;
        ++h.hallucinated_count;
      } else {
        h.grounded[bin] += 1.0;
        sum_g += p;
        ++h.grounded_count;
      }
    }
  }
  if (h.hallucinated_count + h.grounded_count == 0) {
    throw Error(ErrorKind::kEmptyResult, "no labeled mentions to histogram");
  }
  auto normalize = [](std::vector<double>& v, std::size_t n) {
    if (n == 0) return;
    for (double& x : v) x /= static_cast<double>(n);
  };
  normalize(h.hallucinated, h.hallucinated_count);
  normalize(h.grounded, h.grounded_count);
  if (h.hallucinated_count) h.hallucinated_mean = sum_h / static_cast<double>(h.hallucinated_count);
  if (h.grounded_count) h.grounded_mean = sum_g / static_cast<double>(h.grounded_count);
  return h;
}

SimilaritySets similarity_sets(std::span<const GenerationRecord> records) {
  SimilaritySets out;
  for (const auto& rec : records) {
    std::vector<std::pair<MentionLabel, AttentionMap>> labeled;
    for (const auto& m : rec.mentions) {
      if (m.label == MentionLabel::kUnknown) continue;
      labeled.emplace_back(m.label, detection::mention_attention(m, rec));
    }
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      for (std::size_t j = i + 1; j < labeled.size(); ++j) {
        if (labeled[i].first != labeled[j].first) continue;
        const double sim = cosine_similarity(labeled[i].second, labeled[j].second);
        (labeled[i].first == MentionLabel::kHallucinated ? out.s_h : out.s_n).push_back(sim);
      }
    }
  }
  return out;
}

RepetitionStats repetition_stats(const std::vector<std::vector<std::set<std::string>>>& sets, std::size_t k,
                                 bool distinct) {
  if (k == 0) throw Error(ErrorKind::kParameter, "repetition needs k >= 1");
  RepetitionStats out;
  out.k = k;
  out.n.assign(k, 0.0);
  out.r.assign(k, 0.0);
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].size() != k) {
      throw Error(ErrorKind::kShape, "sample " + std::to_string(s) + " has " + std::to_string(sets[s].size()) +
                                         " prompt sets, expected " + std::to_string(k));
    }
    std::map<std::string, std::size_t> count;
    for (const auto& prompt_set : sets[s]) {
      for (const auto& h : prompt_set) ++count[h];
    }
    for (const auto& [h, c] : count) out.n[c - 1] += distinct ? 1.0 : static_cast<double>(c);
  }
  double total = 0.0;
  for (double x : out.n) total += x;
  if (total > 0.0) {
    for (std::size_t i = 0; i < k; ++i) out.r[i] = out.n[i] / total;
  }
  return out;
}

std::vector<EnrichmentLevel> enrichment_experiment(Backend& backend, const std::string& model,
                                                   std::span<const EnrichmentSample> samples,
                                                   std::span<const prompts::EnrichmentTemplate> templates,
                                                   const extraction::Lexicon& lexicon,
                                                   const extraction::AnnotationSet& annotations,
                                                   const decoding::DecodingConfig& cfg, Averaging averaging) {
  // Render everything first so a bad template fails before any generation.
  std::vector<std::vector<std::string>> rendered(templates.size());
  for (std::size_t t = 0; t < templates.size(); ++t) {
    for (const auto& s : samples) {
      const std::size_t n = std::min(templates[t].sentences, s.sentences.size());
      rendered[t].push_back(prompts::render(
          templates[t], std::vector<std::string>(s.sentences.begin(), s.sentences.begin() + static_cast<std::ptrdiff_t>(n))));
    }
  }

  std::vector<EnrichmentLevel> levels;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    EnrichmentLevel level;
    level.name = templates[t].name;
    double sum = 0.0;
    std::size_t denom = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const BackendSession session = backend.open_session(model, samples[i].sample_id);
      const decoding::Prompt prompt{rendered[t][i], backend.encode(session, rendered[t][i])};
      decoding::DecodingConfig sample_cfg = cfg;
      sample_cfg.seed = mix64(cfg.seed ^ fnv1a64(samples[i].sample_id));
      GenerationRecord rec = decoding::generate(backend, session, prompt, {}, sample_cfg);
      rec.sample_id = samples[i].sample_id;
      rec.mentions = extraction::label_mentions(extraction::extract_record_mentions(rec, lexicon), annotations,
                                                samples[i].sample_id);
      double sample_sum = 0.0;
      std::size_t sample_count = 0;
      for (const auto& m : rec.mentions) {
        if (m.label != MentionLabel::kHallucinated) continue;
        sample_sum += detection::poscore(m, rec);
        ++sample_count;
      }
      level.count += sample_count;
      if (averaging == Averaging::kMentions) {
        sum += sample_sum;
        denom += sample_count;
      } else if (sample_count > 0) {
        sum += sample_sum / static_cast<double>(sample_count);
        ++denom;
      }
    }
    level.mean_poscore = denom ? sum / static_cast<double>(denom) : 0.0;
    levels.push_back(level);
  }
  return levels;
}

}  // namespace ccdkit::analysis
