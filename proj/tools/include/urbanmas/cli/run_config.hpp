#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"
#include "urbanmas/geo/ingest.hpp"
#include "urbanmas/llm/live_backend.hpp"
#include "urbanmas/reliability.hpp"

namespace urbanmas::cli {

enum class BackendMode { Live, Mock, Replay, Record };
std::string_view to_string(BackendMode m) noexcept;
std::optional<BackendMode> parse_backend_mode(std::string_view s) noexcept;

/// Everything a subcommand needs. Loaded from a JSON document, then
/// overridden by command-line flags, then finalized (derived paths filled).
struct RunConfig {
  BackendMode backend = BackendMode::Mock;
  /// Backend wrapped by record mode: "live" or "mock".
  BackendMode record_source = BackendMode::Live;
  std::filesystem::path cassette;

  std::filesystem::path dataset;
  std::filesystem::path enriched_dataset;  // default <out>/enriched.jsonl
  std::filesystem::path factor_dir;        // default <out>/factors
  std::filesystem::path predictions;       // default <out>/predictions.jsonl
  std::optional<std::filesystem::path> ground_truth;
  bool rescale_ground_truth = true;
  std::filesystem::path out_dir = "run";

  std::vector<TaskSpec> tasks;
  /// Subset of task ids to run; empty means all of `tasks`.
  std::vector<std::string> selected_tasks;
  std::vector<Variant> variants{Variant::Full};
  std::size_t workers = 4;
  long long seed = 0;
  bool audit = true;

  ReliabilityConfig reliability;
  geo::IngestConfig ingest;
  llm::LiveConfig llm;

  /// Tasks after applying `selected_tasks`. Throws Error(InvalidArgument)
  /// naming an unknown id.
  std::vector<TaskSpec> active_tasks() const;
};

/// Built-in task catalogue used when the config names none.
std::vector<TaskSpec> default_tasks();

/// Parses the JSON config document; relative paths resolve against `base`.
/// Throws Error(Config) on unknown keys or ill-typed values.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fills derived paths and checks invariants: workers >= 1, a valid
/// reliability block, positive ingest limits, a cassette for replay and
/// record modes. Throws Error(Config).
void finalize(RunConfig& cfg);

/// Snapshot written into run manifests. Secrets are omitted.
nlohmann::json snapshot(const RunConfig& cfg);

}  // namespace urbanmas::cli
