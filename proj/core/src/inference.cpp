#include "urbanmas/inference.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "urbanmas/error.hpp"
#include "urbanmas/extraction.hpp"
#include "urbanmas/json_extract.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/prompts.hpp"

namespace urbanmas {

using nlohmann::ordered_json;

namespace {

std::string task_block(const TaskSpec& task) {
  return fmt::format("{}{}\nDescription: {}\n{}{}\nScale: {} (lowest) to {} (highest)\n",
                     prompts::kTaskPrefix, task.id, task.description, prompts::kOutputKeyPrefix,
                     task.output_key, kOutputMin, kOutputMax);
}

std::string schema_instruction(const TaskSpec& task) {
  return fmt::format(
      "Respond with a JSON object of the form {{\"{}\": <number between {} and {}>, "
      "\"rationale\": \"one sentence\"}} and nothing else.",
      task.output_key, kOutputMin, kOutputMax);
}

}  // namespace

InferenceEnvelope build_envelope(const TaskSpec& task, const std::vector<UrbanInfoRecord>& records,
                                 const InferenceConfig& cfg) {
  const auto& keys = all_factor_keys();
  InferenceEnvelope env{task, {}, {}, {}};
  std::array<bool, 4> seen{};
  for (const auto& r : records) {
    const auto idx = static_cast<std::size_t>(
        std::find(keys.begin(), keys.end(), r.key()) - keys.begin());
    if (seen[idx])
      throw Error(ErrorCode::MissingRecords, "duplicate record for pair " + label(r.key()));
    seen[idx] = true;
    env.records[idx] = r;
  }
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (!seen[i]) throw Error(ErrorCode::MissingRecords, "no record for pair " + label(keys[i]));

  env.system_prompt = std::string(prompts::kInferRole) +
                      "\nYou receive four structured JSON records describing one location: social "
                      "and built-environment information at macro and street level. Reason over "
                      "all four jointly, weighing complementary evidence, and predict the task "
                      "outcome on the stated scale. Fields marked (low confidence) are less "
                      "reliable. " +
                      schema_instruction(task);
  std::string user = task_block(task);
  user += "Location: " + env.records[0].location_id + "\n";
  for (const auto& rec : env.records) {
    ordered_json body = ordered_json::object();
    for (const auto& f : rec.fields) {
      std::string text = f.value.text;
      if (rec.status == RecordStatus::LowConfidence && f.value.similarity &&
          *f.value.similarity < cfg.low_confidence_threshold)
        text += " (low confidence)";
      body[f.name] = text;
    }
    user += fmt::format("## {} ({}, {})\n{}\n", label(rec.key()), display_name(rec.dimension),
                        display_name(rec.level), body.dump());
  }
  env.user_prompt = std::move(user);
  return env;
}

ParsedPrediction parse_prediction(std::string_view text, const std::string& output_key) {
  ParsedPrediction out;
  auto extracted = extract_json_object(text);
  if (!extracted.object) {
    out.error = extracted.error;
    return out;
  }
  const auto& obj = *extracted.object;
  auto it = obj.find(output_key);
  if (it == obj.end()) {
    out.error = "missing key \"" + output_key + "\"";
    return out;
  }
  if (!it->is_number()) {
    out.error = "value of \"" + output_key + "\" is not a number";
    return out;
  }
  out.value = it->get<double>();
  if (auto r = obj.find("rationale"); r != obj.end() && r->is_string())
    out.rationale = r->get<std::string>();
  return out;
}

InferenceAgent::InferenceAgent(std::shared_ptr<llm::ChatBackend> backend, InferenceConfig cfg)
    : backend_(std::move(backend)), cfg_(cfg) {}

InferenceResult InferenceAgent::run(llm::ChatRequest req, const TaskSpec& task,
                                    const std::string& location_id, Variant variant) const {
  const auto base_prompt = req.user_prompt;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      req.user_prompt = base_prompt + "Your previous response was rejected: " + last_error + ". " +
                        schema_instruction(task) + "\n";
    }
    auto parsed = parse_prediction(backend_->complete(req).text, task.output_key);
    if (!parsed.value) {
      last_error = parsed.error;
      continue;
    }
    double value = *parsed.value;
    bool clamped = false;
    if (value < kOutputMin || value > kOutputMax) {
      const double raw = value;
      value = std::clamp(value, kOutputMin, kOutputMax);
      clamped = true;
      log::warn(fmt::format("{} {} {}: prediction {} clamped to {}", location_id, task.id,
                            to_string(variant), raw, value));
    }
    return {PredictionOutput{location_id, task.id, value, std::move(parsed.rationale), variant,
                             clamped},
            attempt};
  }
  throw Error(ErrorCode::SchemaFailure,
              fmt::format("{} {}: no valid \"{}\" after {} retries: {}", location_id, task.id,
                          task.output_key, cfg_.max_retries, last_error));
}

InferenceResult InferenceAgent::infer(const TaskSpec& task,
                                      const std::vector<UrbanInfoRecord>& records,
                                      Variant variant) const {
  auto env = build_envelope(task, records, cfg_);
  llm::ChatRequest req{env.system_prompt, env.user_prompt, {},
                       llm::ResponseFormat::StructuredObject, 0, llm::agents::kInfer};
  return run(std::move(req), task, env.records[0].location_id, variant);
}

InferenceResult InferenceAgent::infer_single_llm(const TaskSpec& task,
                                                 const LocationSample& sample) const {
  llm::ChatRequest req;
  req.agent = llm::agents::kSingleLlm;
  req.response_format = llm::ResponseFormat::StructuredObject;
  req.system_prompt = std::string(prompts::kSingleLlmRole) +
                      "\nPredict the task outcome for the described location on the stated "
                      "scale. " +
                      schema_instruction(task);
  req.user_prompt = task_block(task) + render_location_context(sample, cfg_.poi_digest_limit);
  req.image_refs = sample.streetview_refs;
  return run(std::move(req), task, sample.id, Variant::SingleLlm);
}

}  // namespace urbanmas
