#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "urbanmas/domain.hpp"
#include "urbanmas/pipeline.hpp"

namespace urbanmas {

struct EvalReport {
  std::string task_id;
  Variant variant = Variant::Full;
  std::size_t n = 0;
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

/// Min-max rescale onto [0, 10]: v' = 10 (v - min) / (max - min). When all
/// values are equal every output is 5. Throws Error(EmptyInput) or
/// Error(NonFiniteValue).
std::vector<double> rescale_to_unit_interval_times_ten(std::span<const double> values);

struct LabeledValue {
  std::string location_id;
  double value = 0.0;
};

/// MAE, MSE and RMSE over predictions aligned to truths by location id.
/// Throws Error(AlignmentFailure) naming unmatched or duplicate ids and
/// Error(EmptyInput) for no pairs.
EvalReport metrics(const std::vector<LabeledValue>& predictions,
                   const std::vector<LabeledValue>& truths, std::string task_id = {},
                   Variant variant = Variant::Full);

/// Positional variant for already aligned vectors.
EvalReport metrics(std::span<const double> predictions, std::span<const double> truths);

/// 100 (value - reference) / reference; NaN when reference is 0 and value is
/// not.
double relative_change_pct(double value, double reference);

enum class ChangeStyle { Arrow, Signed };

/// Two-decimal percentage computed from unrounded inputs: "↑1.46%",
/// "↓0.73%" (Arrow) or "+1.46%", "-0.73%" (Signed). Changes that round to
/// zero render "0.00%"; an undefined change renders "n/a".
std::string format_change(double value, double reference, ChangeStyle style = ChangeStyle::Arrow);

struct GroundTruthRow {
  std::string location_id;
  std::string task_id;
  double raw_value = 0.0;
};

/// Delimited table with header location_id,task_id,raw_value.
std::vector<GroundTruthRow> load_ground_truth(const std::filesystem::path& path);

/// task_id -> location_id -> value. With `rescale` each task's raw values
/// are min-max rescaled onto [0, 10]; otherwise they must already lie there.
std::map<std::string, std::map<std::string, double>> ground_truth_by_task(
    const std::vector<GroundTruthRow>& rows, bool rescale);

/// One report per (task, variant) present in `predictions`, ordered by task
/// then variant. Missing truth rows raise Error(AlignmentFailure).
std::vector<EvalReport> evaluate_predictions(
    const std::vector<PredictionOutput>& predictions,
    const std::map<std::string, std::map<std::string, double>>& truth);

/// Delimited rendering with relative-change columns against `reference`.
std::string render_report_csv(const std::vector<EvalReport>& reports,
                              Variant reference = Variant::Full);
/// Aligned plain-text table: one block per task, reference row first, other
/// rows as "13.39 (↑1.46%)".
std::string render_report_table(const std::vector<EvalReport>& reports,
                                Variant reference = Variant::Full);

std::string_view variant_display_name(Variant v) noexcept;

struct ExperimentResult {
  std::vector<EvalReport> reports;
  RunResult run;
  /// Locations excluded from metrics because a prediction failed.
  std::size_t excluded_locations = 0;
};

/// Runs every (task, variant) over `dataset` and scores each variant against
/// the samples' ground truth. Locations where any requested prediction of a
/// task failed are excluded from that task's metrics and counted.
ExperimentResult run_experiment(const std::vector<LocationSample>& dataset,
                                const std::vector<TaskSpec>& tasks,
                                const std::vector<Variant>& variants, const Pipeline& pipeline,
                                const std::map<std::string, FactorMap>& guided);

}  // namespace urbanmas
