#include "urbanmas/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "urbanmas/error.hpp"
#include "urbanmas/logging.hpp"

namespace urbanmas {

std::vector<double> rescale_to_unit_interval_times_ten(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "rescale: no values");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "rescale: non-finite value");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double max = *hi;
  std::vector<double> out;
  out.reserve(values.size());
  if (max == min) {
    out.assign(values.size(), 5.0);
    return out;
  }
  for (double v : values) out.push_back(kOutputMax * (v - min) / (max - min));
  // Guard the endpoints against rounding.
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == min) out[i] = kOutputMin;
    if (values[i] == max) out[i] = kOutputMax;
  }
  return out;
}

EvalReport metrics(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size())
    throw Error(ErrorCode::AlignmentFailure,
                fmt::format("{} predictions vs {} truths", predictions.size(), truths.size()));
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "metrics: no pairs");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(predictions.size());
  EvalReport r;
  r.n = predictions.size();
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  r.rmse = std::sqrt(r.mse);
  return r;
}

EvalReport metrics(const std::vector<LabeledValue>& predictions,
                   const std::vector<LabeledValue>& truths, std::string task_id,
                   Variant variant) {
  std::map<std::string, double> truth;
  for (const auto& t : truths)
    if (!truth.emplace(t.location_id, t.value).second)
      throw Error(ErrorCode::AlignmentFailure, "duplicate truth for '" + t.location_id + "'");

  std::set<std::string> seen;
  std::vector<std::string> unmatched;
  std::vector<double> p;
  std::vector<double> t;
  for (const auto& pred : predictions) {
    if (!seen.insert(pred.location_id).second)
      throw Error(ErrorCode::AlignmentFailure,
                  "duplicate prediction for '" + pred.location_id + "'");
    auto it = truth.find(pred.location_id);
    if (it == truth.end()) {
      unmatched.push_back(pred.location_id);
      continue;
    }
    p.push_back(pred.value);
    t.push_back(it->second);
  }
  for (const auto& [id, v] : truth)
    if (!seen.count(id)) unmatched.push_back(id);
  if (!unmatched.empty()) {
    std::sort(unmatched.begin(), unmatched.end());
    std::string ids;
    for (const auto& id : unmatched) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::AlignmentFailure, "unmatched location ids: " + ids);
  }
  auto r = metrics(std::span<const double>(p), std::span<const double>(t));
  r.task_id = std::move(task_id);
  r.variant = variant;
  return r;
}

double relative_change_pct(double value, double reference) {
  if (reference == 0.0)
    return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - reference) / reference;
}

std::string format_change(double value, double reference, ChangeStyle style) {
  const double pct = relative_change_pct(value, reference);
  if (std::isnan(pct)) return "n/a";
  const auto magnitude = fmt::format("{:.2f}%", std::abs(pct));
  if (magnitude == "0.00%") return magnitude;
  if (style == ChangeStyle::Signed) return (pct > 0 ? "+" : "-") + magnitude;
  return (pct > 0 ? "↑" : "↓") + magnitude;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string pad(std::string s, std::size_t width) {
  const auto w = display_width(s);
  if (w < width) s.append(width - w, ' ');
  return s;
}

const EvalReport* find_report(const std::vector<EvalReport>& reports, const std::string& task,
                              Variant v) {
  for (const auto& r : reports)
    if (r.task_id == task && r.variant == v) return &r;
  return nullptr;
}

std::vector<std::string> task_order(const std::vector<EvalReport>& reports) {
  std::vector<std::string> out;
  for (const auto& r : reports)
    if (std::find(out.begin(), out.end(), r.task_id) == out.end()) out.push_back(r.task_id);
  return out;
}

}  // namespace

std::vector<GroundTruthRow> load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open ground truth '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, path.string() + " is empty");
  const auto header = split_csv_line(line);
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ": header lacks column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_loc = col("location_id");
  const auto c_task = col("task_id");
  const auto c_val = col("raw_value");

  std::vector<GroundTruthRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    const auto need = std::max({c_loc, c_task, c_val});
    if (f.size() <= need)
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: expected {} columns", path.string(), lineno, header.size()));
    GroundTruthRow row{f[c_loc], f[c_task], 0.0};
    try {
      std::size_t used = 0;
      row.raw_value = std::stod(f[c_val], &used);
      if (used != f[c_val].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("{}:{}: raw_value '{}' is not a number", path.string(), lineno,
                              f[c_val]));
    }
    if (!std::isfinite(row.raw_value))
      throw Error(ErrorCode::NonFiniteValue, fmt::format("{}:{}: non-finite raw_value",
                                                         path.string(), lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::map<std::string, std::map<std::string, double>> ground_truth_by_task(
    const std::vector<GroundTruthRow>& rows, bool rescale) {
  std::map<std::string, std::vector<const GroundTruthRow*>> grouped;
  for (const auto& r : rows) grouped[r.task_id].push_back(&r);

  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [task, group] : grouped) {
    std::vector<double> raw;
    for (const auto* r : group) raw.push_back(r->raw_value);
    const auto values = rescale ? rescale_to_unit_interval_times_ten(raw) : raw;
    auto& dest = out[task];
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (!rescale && !(values[i] >= kOutputMin && values[i] <= kOutputMax))
        throw Error(ErrorCode::InvalidArgument, "ground truth for '" + group[i]->location_id +
                                                    "' outside [0, 10]; enable rescaling");
      if (!dest.emplace(group[i]->location_id, values[i]).second)
        throw Error(ErrorCode::AlignmentFailure, "duplicate ground truth for '" +
                                                     group[i]->location_id + "' in " + task);
    }
  }
  return out;
}

std::vector<EvalReport> evaluate_predictions(
    const std::vector<PredictionOutput>& predictions,
    const std::map<std::string, std::map<std::string, double>>& truth) {
  std::map<std::pair<std::string, Variant>, std::vector<LabeledValue>> grouped;
  for (const auto& p : predictions)
    grouped[{p.task_id, p.variant}].push_back({p.location_id, p.value});

  std::vector<EvalReport> out;
  for (const auto& [key, preds] : grouped) {
    const auto& [task, variant] = key;
    auto it = truth.find(task);
    if (it == truth.end())
      throw Error(ErrorCode::AlignmentFailure, "no ground truth for task '" + task + "'");
    std::vector<LabeledValue> truths;
    std::vector<std::string> missing;
    for (const auto& p : preds) {
      auto t = it->second.find(p.location_id);
      if (t == it->second.end()) {
        missing.push_back(p.location_id);
      } else {
        truths.push_back({p.location_id, t->second});
      }
    }
    if (!missing.empty()) {
      std::string ids;
      for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
      throw Error(ErrorCode::AlignmentFailure,
                  "task '" + task + "': no ground truth for location ids: " + ids);
    }
    out.push_back(metrics(preds, truths, task, variant));
  }
  return out;
}

std::string_view variant_display_name(Variant v) noexcept {
  switch (v) {
    case Variant::Full: return "Full pipeline";
    case Variant::NoFactors: return "- PredictiveFactors";
    case Variant::NoReliability: return "- ReliabilityBoost";
    case Variant::SingleLlm: return "Single LLM";
  }
  return "";
}

std::string render_report_csv(const std::vector<EvalReport>& reports, Variant reference) {
  std::string out = "task_id,variant,n,mae,mse,rmse,mae_change,mse_change,rmse_change\n";
  for (const auto& r : reports) {
    const auto* ref = find_report(reports, r.task_id, reference);
    auto change = [&](double v, double rv) {
      return ref && r.variant != reference ? format_change(v, rv, ChangeStyle::Signed)
                                           : std::string{};
    };
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{},{},{}\n", csv_field(r.task_id),
                       to_string(r.variant), r.n, r.mae, r.mse, r.rmse,
                       change(r.mae, ref ? ref->mae : 0.0), change(r.mse, ref ? ref->mse : 0.0),
                       change(r.rmse, ref ? ref->rmse : 0.0));
  }
  return out;
}

std::string render_report_table(const std::vector<EvalReport>& reports, Variant reference) {
  constexpr std::size_t kNameWidth = 22;
  constexpr std::size_t kCellWidth = 20;
  std::string out;
  for (const auto& task : task_order(reports)) {
    const auto* ref = find_report(reports, task, reference);
    out += fmt::format("Task: {}\n", task);
    out += pad("Method Variant", kNameWidth) + pad("MAE", kCellWidth) + pad("MSE", kCellWidth) +
           "RMSE\n";
    std::vector<const EvalReport*> rows;
    if (ref) rows.push_back(ref);
    for (const auto v : all_variants())
      if (v != reference)
        if (const auto* r = find_report(reports, task, v)) rows.push_back(r);
    for (const auto* r : rows) {
      auto cell = [&](double v, double rv) {
        auto s = fmt::format("{:.2f}", v);
        if (ref && r != ref) s += " (" + format_change(v, rv) + ")";
        return s;
      };
      out += pad(std::string(variant_display_name(r->variant)), kNameWidth) +
             pad(cell(r->mae, ref ? ref->mae : 0.0), kCellWidth) +
             pad(cell(r->mse, ref ? ref->mse : 0.0), kCellWidth) +
             cell(r->rmse, ref ? ref->rmse : 0.0) + fmt::format("   n={}\n", r->n);
    }
    out += "\n";
  }
  return out;
}

ExperimentResult run_experiment(const std::vector<LocationSample>& dataset,
                                const std::vector<TaskSpec>& tasks,
                                const std::vector<Variant>& variants, const Pipeline& pipeline,
                                const std::map<std::string, FactorMap>& guided) {
  ExperimentResult out;
  out.run = pipeline.run(dataset, tasks, variants, guided);

  std::map<std::string, std::set<std::string>> failed;  // task -> locations
  for (const auto& f : out.run.failures) failed[f.task_id].insert(f.location_id);
  std::set<std::string> excluded;
  for (const auto& [task, ids] : failed) excluded.insert(ids.begin(), ids.end());
  out.excluded_locations = excluded.size();
  if (!excluded.empty())
    log::warn(fmt::format("{} location(s) excluded from metrics after pipeline failures",
                          excluded.size()));

  std::map<std::string, std::map<std::string, double>> truth;
  for (const auto& s : dataset)
    for (const auto& [task, v] : s.ground_truth) truth[task][s.id] = v;

  std::vector<PredictionOutput> kept;
  for (const auto& p : out.run.predictions) {
    auto it = failed.find(p.task_id);
    if (it != failed.end() && it->second.count(p.location_id)) continue;
    kept.push_back(p);
  }
  auto reports = evaluate_predictions(kept, truth);
  // Order by requested task, then requested variant.
  for (const auto& task : tasks)
    for (const auto v : variants)
      for (const auto& r : reports)
        if (r.task_id == task.id && r.variant == v) out.reports.push_back(r);
  return out;
}

}  // namespace urbanmas
