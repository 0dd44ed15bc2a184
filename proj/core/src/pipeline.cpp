#include "urbanmas/pipeline.hpp"

#include <mutex>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/parallel.hpp"
#include "urbanmas/serialization.hpp"

namespace urbanmas {

using nlohmann::json;

FactorSet generic_factor_set(const std::string& task_id, FactorKey key) {
  return FactorSet{task_id,
                   key.dimension,
                   key.level,
                   {
                       {"General character", "Overall character of the area around the location."},
                       {"Notable features", "Features of the location that stand out."},
                       {"Activity level", "How much activity is typically present."},
                       {"Accessibility", "How easily people can reach and move through the area."},
                       {"Physical condition", "State of upkeep of the surroundings."},
                       {"Other observations", "Any further information relevant to the task."},
                   }};
}

FactorMap generic_factor_map(const std::string& task_id) {
  FactorMap out;
  for (const auto key : all_factor_keys()) out.emplace(key, generic_factor_set(task_id, key));
  return out;
}

bool needs_guided_factors(Variant v) noexcept {
  return v == Variant::Full || v == Variant::NoReliability;
}

Pipeline::Pipeline(std::shared_ptr<llm::ChatBackend> backend, PipelineConfig cfg)
    : backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      extractor_(backend_, cfg_.extraction, cfg_.reliability),
      inference_(backend_, cfg_.inference) {
  if (cfg_.workers == 0) throw Error(ErrorCode::Config, "workers must be >= 1");
}

PredictionOutcome Pipeline::predict(const LocationSample& sample, const TaskSpec& task,
                                    Variant variant, const FactorMap* guided) const {
  PredictionOutcome out;
  if (variant == Variant::SingleLlm) {
    auto r = inference_.infer_single_llm(task, sample);
    out.prediction = std::move(r.prediction);
    out.inference_retries = r.retry_count;
    return out;
  }

  FactorMap generic;
  const FactorMap* factors = guided;
  if (variant == Variant::NoFactors) {
    generic = generic_factor_map(task.id);
    factors = &generic;
  } else if (!guided) {
    throw Error(ErrorCode::Config, "variant " + std::string(to_string(variant)) +
                                       " needs guided factor sets for task " + task.id);
  }

  out.transcripts = variant == Variant::NoReliability
                        ? extractor_.extract_all_unchecked(sample, *factors)
                        : extractor_.extract_reliable(sample, *factors);
  std::vector<UrbanInfoRecord> records;
  for (const auto& [key, t] : out.transcripts) records.push_back(t.final_record);
  auto r = inference_.infer(task, records, variant);
  out.prediction = std::move(r.prediction);
  out.inference_retries = r.retry_count;
  return out;
}

void Pipeline::write_audit(const LocationSample& sample, const TaskSpec& task,
                           const PredictionOutcome& outcome) const {
  const auto dir = *cfg_.audit_dir / sample.id / task.id /
                   std::string(to_string(outcome.prediction.variant));
  for (const auto& [key, t] : outcome.transcripts)
    write_text_file(dir / (label(key) + ".json"), to_json(t).dump(2) + "\n");
  json inference{{"prediction", outcome.prediction},
                 {"inference_retries", outcome.inference_retries}};
  write_text_file(dir / "inference.json", inference.dump(2) + "\n");
}

RunResult Pipeline::run(const std::vector<LocationSample>& samples,
                        const std::vector<TaskSpec>& tasks, const std::vector<Variant>& variants,
                        const std::map<std::string, FactorMap>& guided) const {
  for (const auto& task : tasks)
    for (const auto v : variants)
      if (needs_guided_factors(v) && !guided.count(task.id))
        throw Error(ErrorCode::Config, "no factor sets for task '" + task.id +
                                           "'; run the factors stage first");

  struct Job {
    const LocationSample* sample;
    const TaskSpec* task;
    Variant variant;
  };
  std::vector<Job> jobs;
  for (const auto& s : samples)
    for (const auto& t : tasks)
      for (const auto v : variants) jobs.push_back({&s, &t, v});

  std::vector<std::optional<PredictionOutcome>> outcomes(jobs.size());
  std::vector<std::optional<RunFailure>> failures(jobs.size());

  parallel_for(jobs.size(), cfg_.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const FactorMap* factors = nullptr;
    if (auto it = guided.find(job.task->id); it != guided.end()) factors = &it->second;
    try {
      auto outcome = predict(*job.sample, *job.task, job.variant, factors);
      if (cfg_.audit_dir) write_audit(*job.sample, *job.task, outcome);
      outcomes[i] = std::move(outcome);
    } catch (const Error& e) {
      const auto msg = fmt::format("{} / {} / {}: {} ({})", job.sample->id, job.task->id,
                                   to_string(job.variant), e.what(), to_string(e.code()));
      log::error(msg);
      failures[i] = RunFailure{job.sample->id, job.task->id, job.variant, e.what()};
    } catch (const std::exception& e) {
      const auto msg = fmt::format("{} / {} / {}: {}", job.sample->id, job.task->id,
                                   to_string(job.variant), e.what());
      log::error(msg);
      failures[i] = RunFailure{job.sample->id, job.task->id, job.variant, e.what()};
    }
  });

  RunResult result;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (failures[i]) {
      result.failures.push_back(std::move(*failures[i]));
      continue;
    }
    auto& o = *outcomes[i];
    ++result.stats.predictions;
    if (o.prediction.clamped) ++result.stats.clamped;
    for (const auto& [key, t] : o.transcripts) {
      result.stats.refine_calls += static_cast<std::size_t>(t.refine_calls);
      result.stats.reasks += static_cast<std::size_t>(t.reasks);
      for (const auto& f : t.final_record.fields)
        result.stats.repair_rounds += static_cast<std::size_t>(f.value.repair_rounds);
      if (t.final_record.status == RecordStatus::LowConfidence)
        ++result.stats.low_confidence_records;
    }
    result.predictions.push_back(std::move(o.prediction));
  }
  return result;
}

}  // namespace urbanmas
