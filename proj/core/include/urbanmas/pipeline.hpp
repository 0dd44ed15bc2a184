#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "urbanmas/domain.hpp"
#include "urbanmas/extraction.hpp"
#include "urbanmas/guidance.hpp"
#include "urbanmas/inference.hpp"
#include "urbanmas/llm/backend.hpp"
#include "urbanmas/reliability.hpp"

namespace urbanmas {

inline constexpr const char* kGenericFactorsVersion = "generic-v1";

/// Fixed placeholder factors used by the no_factors ablation. The same six
/// generic factors stand in for every (dimension, level) pair.
FactorSet generic_factor_set(const std::string& task_id, FactorKey key);
FactorMap generic_factor_map(const std::string& task_id);

struct PipelineConfig {
  ExtractionConfig extraction;
  ReliabilityConfig reliability;
  InferenceConfig inference;
  std::size_t workers = 4;
  /// When set, per-location transcripts are written below this directory.
  std::optional<std::filesystem::path> audit_dir;
};

struct PredictionOutcome {
  PredictionOutput prediction;
  std::map<FactorKey, PairTranscript> transcripts;
  int inference_retries = 0;
};

struct RunFailure {
  std::string location_id;
  std::string task_id;
  Variant variant;
  std::string message;
};

struct RunStats {
  std::size_t predictions = 0;
  std::size_t clamped = 0;
  std::size_t refine_calls = 0;
  std::size_t reasks = 0;
  std::size_t repair_rounds = 0;
  std::size_t low_confidence_records = 0;
};

struct RunResult {
  /// Ordered by sample, then task, then variant as given.
  std::vector<PredictionOutput> predictions;
  std::vector<RunFailure> failures;
  RunStats stats;
};

/// Wires the three agent layers together for each pipeline variant.
class Pipeline {
 public:
  Pipeline(std::shared_ptr<llm::ChatBackend> backend, PipelineConfig cfg = {});

  /// `guided` must hold the task's guided factor sets for the full and
  /// no_reliability variants; it is ignored otherwise.
  PredictionOutcome predict(const LocationSample& sample, const TaskSpec& task, Variant variant,
                            const FactorMap* guided) const;

  /// Every (sample, task, variant) on the worker pool. Failures are recorded
  /// and logged, never thrown. Throws Error(Config) up front when a guided
  /// variant lacks factor sets for a task.
  RunResult run(const std::vector<LocationSample>& samples, const std::vector<TaskSpec>& tasks,
                const std::vector<Variant>& variants,
                const std::map<std::string, FactorMap>& guided) const;

  const PipelineConfig& config() const noexcept { return cfg_; }

 private:
  void write_audit(const LocationSample& sample, const TaskSpec& task,
                   const PredictionOutcome& outcome) const;

  std::shared_ptr<llm::ChatBackend> backend_;
  PipelineConfig cfg_;
  Extractor extractor_;
  InferenceAgent inference_;
};

bool needs_guided_factors(Variant v) noexcept;

}  // namespace urbanmas
