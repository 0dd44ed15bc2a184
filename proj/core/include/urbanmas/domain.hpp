#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanmas {

inline constexpr double kOutputMin = 0.0;
inline constexpr double kOutputMax = 10.0;
inline constexpr std::size_t kFactorsPerSet = 6;

enum class Dimension { Social, BuiltEnvironmental };
enum class Level { Macro, Street };

/// Machine labels: "social" / "environment", "macro" / "street".
std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Level r) noexcept;
/// Human labels: "Social" / "Built Environmental", "Macro" / "Street".
std::string_view display_name(Dimension d) noexcept;
std::string_view display_name(Level r) noexcept;

std::optional<Dimension> parse_dimension(std::string_view s) noexcept;
std::optional<Level> parse_level(std::string_view s) noexcept;

/// One (dimension, level) cell of the guidance grid.
struct FactorKey {
  Dimension dimension;
  Level level;

  auto operator<=>(const FactorKey&) const = default;
};

/// "social-macro", "environment-street", ...
std::string label(FactorKey key);
std::optional<FactorKey> parse_factor_key(std::string_view s) noexcept;

/// D x R in canonical order: social-macro, social-street, environment-macro,
/// environment-street.
const std::array<FactorKey, 4>& all_factor_keys() noexcept;

struct TaskSpec {
  std::string id;
  std::string description;
  std::string output_key;
};

/// Returns violations; empty when the task is well-formed.
std::vector<std::string> validate_task(const TaskSpec& task);
/// Throws Error(InvalidArgument) on a malformed task or duplicate ids.
void require_valid_tasks(const std::vector<TaskSpec>& tasks);

struct PoiEntry {
  std::string name;
  std::string category;
  double distance_m = 0.0;

  bool operator==(const PoiEntry&) const = default;
};

struct LocationSample {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string city;
  std::optional<std::string> address;
  std::vector<PoiEntry> pois;
  std::vector<std::string> streetview_refs;
  std::map<std::string, double> ground_truth;

  bool operator==(const LocationSample&) const = default;
};

std::vector<std::string> validate_location(const LocationSample& sample);
void require_valid_location(const LocationSample& sample);
bool coordinates_in_range(double lat, double lon) noexcept;

struct PredictiveFactor {
  std::string name;
  std::string description;

  bool operator==(const PredictiveFactor&) const = default;
};

struct FactorSet {
  std::string task_id;
  Dimension dimension = Dimension::Social;
  Level level = Level::Macro;
  std::vector<PredictiveFactor> factors;

  FactorKey key() const noexcept { return {dimension, level}; }
  std::vector<std::string> names() const;

  bool operator==(const FactorSet&) const = default;
};

/// Lowercased and trimmed; the identity used for duplicate detection.
std::string normalize_factor_name(std::string_view name);

struct FactorSetValidation {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Never throws; reports every violated rule.
FactorSetValidation validate_factor_set(const FactorSet& fs);

using FactorMap = std::map<FactorKey, FactorSet>;

enum class Provenance { VariantA, VariantB, Refined };
std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view s) noexcept;

struct FieldValue {
  std::string text;
  Provenance provenance = Provenance::VariantA;
  std::optional<double> similarity;
  int repair_rounds = 0;

  bool operator==(const FieldValue&) const = default;
};

enum class RecordStatus { Raw, Stable, Refined, LowConfidence };
std::string_view to_string(RecordStatus s) noexcept;
std::optional<RecordStatus> parse_record_status(std::string_view s) noexcept;
/// Only raw -> {stable, refined, low_confidence} is permitted.
bool is_allowed_transition(RecordStatus from, RecordStatus to) noexcept;

struct UrbanInfoField {
  std::string name;
  FieldValue value;

  bool operator==(const UrbanInfoField&) const = default;
};

struct UrbanInfoRecord {
  std::string location_id;
  std::string task_id;
  Dimension dimension = Dimension::Social;
  Level level = Level::Macro;
  std::vector<UrbanInfoField> fields;
  RecordStatus status = RecordStatus::Raw;

  FactorKey key() const noexcept { return {dimension, level}; }
  std::vector<std::string> keys() const;
  const FieldValue* find(std::string_view name) const noexcept;

  bool operator==(const UrbanInfoRecord&) const = default;
};

/// Checks key order against the governing factor set, nonempty texts and
/// similarity bounds.
std::vector<std::string> validate_record(const UrbanInfoRecord& record, const FactorSet& fs,
                                         int max_repair_rounds);

struct SimilarityReport {
  std::vector<std::pair<std::string, double>> per_field;
  double aggregate = 1.0;
  std::vector<std::string> conflicting;
  double threshold = 0.72;

  std::optional<double> score(std::string_view field) const noexcept;
  bool is_conflicting(std::string_view field) const noexcept;
};

enum class Variant { Full, NoFactors, NoReliability, SingleLlm };
std::string_view to_string(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view s) noexcept;
const std::array<Variant, 4>& all_variants() noexcept;

struct PredictionOutput {
  std::string location_id;
  std::string task_id;
  double value = 0.0;
  std::optional<std::string> rationale;
  Variant variant = Variant::Full;
  bool clamped = false;

  bool operator==(const PredictionOutput&) const = default;
};

}  // namespace urbanmas
