#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"
#include "urbanmas/llm/backend.hpp"
#include "urbanmas/reliability.hpp"

namespace urbanmas {

struct ExtractionConfig {
  /// POIs listed in the prompt digest, closest first.
  std::size_t poi_digest_limit = 10;
  /// Extracted values longer than this are cut (on a UTF-8 boundary).
  std::size_t max_value_chars = 400;
  bool concurrent = true;
};

struct ExtractionPrompt {
  std::string system;
  std::string user;
  std::vector<std::string> image_refs;

  bool operator==(const ExtractionPrompt&) const = default;
};

/// Deterministic rendering of the extraction prompt for one location and one
/// factor set. Street-level prompts carry the street-view references; macro
/// prompts never do.
ExtractionPrompt build_prompt(const LocationSample& sample, const FactorSet& fs,
                              const ExtractionConfig& cfg = {});

/// Location description shared by extraction, refinement and the baseline.
std::string render_location_context(const LocationSample& sample, std::size_t poi_limit);

struct ParsedRecord {
  /// factor name -> extracted text, only for keys that were usable.
  std::map<std::string, std::string> values;
  std::vector<std::string> missing;
  std::string error;

  bool complete() const noexcept { return error.empty() && missing.empty(); }
};

/// Parses a structured object keyed by factor names. Empty or non-scalar
/// values count as missing; extra keys are ignored.
ParsedRecord parse_record(std::string_view text, const FactorSet& fs, std::size_t max_chars);

/// Builds a raw record in factor order; every factor must have a value.
UrbanInfoRecord assemble_record(const LocationSample& sample, const FactorSet& fs,
                                const std::map<std::string, std::string>& values,
                                Provenance provenance);

/// Everything that happened for one (dimension, level) pair; written to the
/// audit directory.
struct PairTranscript {
  FactorKey key{};
  ExtractionPrompt prompt;
  UrbanInfoRecord variant_a;
  std::optional<UrbanInfoRecord> variant_b;
  std::optional<SimilarityReport> report;
  UrbanInfoRecord final_record;
  int reasks = 0;
  int refine_calls = 0;
};

nlohmann::json to_json(const PairTranscript& t);

class Extractor {
 public:
  Extractor(std::shared_ptr<llm::ChatBackend> backend, ExtractionConfig cfg = {},
            ReliabilityConfig rel = {});

  /// Variant A with seed 0 and variant B with seed 1, both status raw. Each
  /// variant gets one re-ask naming missing keys; throws Error(ParseFailure)
  /// naming the agent when that fails too.
  std::pair<UrbanInfoRecord, UrbanInfoRecord> extract_variants(const LocationSample& sample,
                                                               const FactorSet& fs,
                                                               int* reasks = nullptr) const;

  /// Single-variant extraction used when the reliability layer is ablated.
  PairTranscript extract_unchecked(const LocationSample& sample, const FactorSet& fs) const;

  /// extract_variants -> evaluate -> reconcile for one pair.
  PairTranscript extract_pair(const LocationSample& sample, const FactorSet& fs) const;

  /// All four pairs, optionally concurrently. Errors carry the pair label.
  std::map<FactorKey, PairTranscript> extract_reliable(const LocationSample& sample,
                                                       const FactorMap& factors) const;
  std::map<FactorKey, PairTranscript> extract_all_unchecked(const LocationSample& sample,
                                                            const FactorMap& factors) const;

  const ReliabilityConfig& reliability() const noexcept { return rel_; }

 private:
  UrbanInfoRecord extract_one(const LocationSample& sample, const FactorSet& fs,
                              const ExtractionPrompt& prompt, int seed, int& reasks) const;
  std::string refine_field(const LocationSample& sample, const FactorSet& fs,
                           const RefineRequest& req) const;
  template <class Fn>
  std::map<FactorKey, PairTranscript> for_each_pair(const FactorMap& factors, Fn fn) const;

  std::shared_ptr<llm::ChatBackend> backend_;
  ExtractionConfig cfg_;
  ReliabilityConfig rel_;
};

}  // namespace urbanmas
