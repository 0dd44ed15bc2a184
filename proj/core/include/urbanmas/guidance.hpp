#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "urbanmas/domain.hpp"
#include "urbanmas/llm/backend.hpp"

namespace urbanmas {

/// Research findings for one (dimension, level) pair of a task.
struct ResearchReport {
  std::string task_id;
  Dimension dimension = Dimension::Social;
  Level level = Level::Macro;
  std::string body;

  bool operator==(const ResearchReport&) const = default;
};

struct GuidanceConfig {
  std::size_t min_report_chars = 400;
  int report_retries = 2;
  int summary_retries = 2;
  bool concurrent = true;
};

struct SummaryOutcome {
  FactorSet factors;
  int retry_count = 0;
};

struct GuidanceResult {
  FactorMap factors;
  std::map<FactorKey, ResearchReport> reports;

  bool operator==(const GuidanceResult&) const = default;
};

/// Predictive factor guidance: a research call per (dimension, level) pair
/// followed by a summary call that compresses the report into six factors.
class FactorGuide {
 public:
  FactorGuide(std::shared_ptr<llm::ChatBackend> backend, GuidanceConfig cfg = {});

  /// Retries degenerate (short) reports; throws Error(DegenerateReport) once
  /// retries are exhausted.
  ResearchReport research(const TaskSpec& task, Dimension d, Level r) const;

  /// Re-asks with the violation list on an invalid set; throws
  /// Error(InvalidFactorSet) once retries are exhausted. The summarizer sees
  /// the task description as well as the report.
  SummaryOutcome summarize(const TaskSpec& task, const ResearchReport& report) const;

  /// All four pairs; errors are labeled with the failing pair.
  GuidanceResult guide(const TaskSpec& task) const;

 private:
  std::shared_ptr<llm::ChatBackend> backend_;
  GuidanceConfig cfg_;
};

std::filesystem::path factor_cache_path(const std::filesystem::path& dir, const std::string& task_id);
void save_factor_cache(const std::filesystem::path& path, const TaskSpec& task,
                       const GuidanceResult& result);
/// Throws Error(Io) when missing and Error(InvalidFactorSet) when a stored set
/// fails validation or a pair is absent.
GuidanceResult load_factor_cache(const std::filesystem::path& path);

/// Loads the task's cache under `dir` when present; otherwise guides and
/// writes it. `hit` reports which path was taken.
GuidanceResult guide_cached(const FactorGuide& guide, const TaskSpec& task,
                            const std::filesystem::path& dir, bool* hit = nullptr);

/// Prompt renderers, exposed for tests and audit.
llm::ChatRequest research_request(const TaskSpec& task, FactorKey key, int attempt,
                                  std::size_t previous_length);
llm::ChatRequest summary_request(const TaskSpec& task, const ResearchReport& report,
                                 const std::vector<std::string>& violations);

/// Parses {"factors": [{"name", "description"}, ...]} into a FactorSet.
/// Returns std::nullopt with `error` set when the shape is wrong.
std::optional<FactorSet> parse_factor_set(std::string_view text, const std::string& task_id,
                                          FactorKey key, std::string& error);

}  // namespace urbanmas
