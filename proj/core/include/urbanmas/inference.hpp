#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "urbanmas/domain.hpp"
#include "urbanmas/llm/backend.hpp"

namespace urbanmas {

struct InferenceConfig {
  int max_retries = 3;
  /// POIs listed in the single-LLM baseline prompt.
  std::size_t poi_digest_limit = 10;
  /// Fields of a low_confidence record scoring below this are marked
  /// "(low confidence)" in the joint prompt.
  double low_confidence_threshold = 0.72;
};

/// The four reliable records in canonical order plus the rendered prompt.
struct InferenceEnvelope {
  TaskSpec task;
  std::array<UrbanInfoRecord, 4> records;
  std::string system_prompt;
  std::string user_prompt;
};

/// Orders records canonically (social-macro, social-street,
/// environment-macro, environment-street) regardless of input order. Throws
/// Error(MissingRecords) unless each pair appears exactly once.
InferenceEnvelope build_envelope(const TaskSpec& task, const std::vector<UrbanInfoRecord>& records,
                                 const InferenceConfig& cfg = {});

struct InferenceResult {
  PredictionOutput prediction;
  int retry_count = 0;
};

struct ParsedPrediction {
  std::optional<double> value;
  std::optional<std::string> rationale;
  std::string error;
};

/// Requires `output_key` holding a JSON number; other keys are ignored apart
/// from an optional "rationale" string.
ParsedPrediction parse_prediction(std::string_view text, const std::string& output_key);

class InferenceAgent {
 public:
  InferenceAgent(std::shared_ptr<llm::ChatBackend> backend, InferenceConfig cfg = {});

  /// Joint inference over the four records. Out-of-range values are clamped
  /// into [0, 10] with a warning; malformed responses are retried with the
  /// parse error quoted back, then Error(SchemaFailure).
  InferenceResult infer(const TaskSpec& task, const std::vector<UrbanInfoRecord>& records,
                        Variant variant = Variant::Full) const;

  /// Single-prompt baseline straight from the location context.
  InferenceResult infer_single_llm(const TaskSpec& task, const LocationSample& sample) const;

 private:
  InferenceResult run(llm::ChatRequest req, const TaskSpec& task, const std::string& location_id,
                      Variant variant) const;

  std::shared_ptr<llm::ChatBackend> backend_;
  InferenceConfig cfg_;
};

}  // namespace urbanmas
