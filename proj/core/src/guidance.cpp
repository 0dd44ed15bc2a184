#include "urbanmas/guidance.hpp"

#include <future>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/json_extract.hpp"
#include "urbanmas/logging.hpp"
#include "urbanmas/prompts.hpp"
#include "urbanmas/serialization.hpp"

namespace urbanmas {

using nlohmann::json;

namespace {

std::string task_header(const TaskSpec& task, FactorKey key) {
  return fmt::format("{}{}\nDescription: {}\n{}{}\n{}{}\n", prompts::kTaskPrefix, task.id,
                     task.description, prompts::kDimensionPrefix, display_name(key.dimension),
                     prompts::kLevelPrefix, display_name(key.level));
}

}  // namespace

llm::ChatRequest research_request(const TaskSpec& task, FactorKey key, int attempt,
                                  std::size_t previous_length) {
  llm::ChatRequest req;
  req.agent = llm::agents::kResearch;
  req.system_prompt = std::string(prompts::kResearchRole) +
                      "\nYou investigate which measurable factors most strongly influence a "
                      "human-centered urban outcome. Write a concise research-level report for "
                      "the given task, dimension and spatial level. Name the six most influential "
                      "predictive factors as a numbered list, one per line, in the form "
                      "'N. Name: one-sentence measurable definition', and justify them briefly.";
  req.user_prompt = task_header(task, key) +
                    "Identify the six most influential predictive factors for this task at this "
                    "dimension and level.";
  if (attempt > 0) {
    req.user_prompt += fmt::format(
        "\nYour previous report was too short ({} characters). Write a complete report.",
        previous_length);
  }
  req.response_format = llm::ResponseFormat::FreeText;
  return req;
}

llm::ChatRequest summary_request(const TaskSpec& task, const ResearchReport& report,
                                 const std::vector<std::string>& violations) {
  llm::ChatRequest req;
  req.agent = llm::agents::kSummary;
  req.system_prompt =
      std::string(prompts::kSummaryRole) +
      "\nCompress the research report into exactly six concise predictive factors with "
      "pairwise distinct names. Respond with a JSON object of the form "
      "{\"factors\": [{\"name\": \"short noun phrase\", \"description\": \"one-sentence "
      "measurable definition\"}]} and nothing else.";
  req.user_prompt = task_header(task, {report.dimension, report.level}) + prompts::kReportBegin +
                    "\n" + report.body + "\n" + prompts::kReportEnd + "\n";
  if (!violations.empty()) {
    req.user_prompt += "Your previous answer was rejected for these reasons:\n";
    for (const auto& v : violations) req.user_prompt += "- " + v + "\n";
    req.user_prompt += "Return exactly six factors with distinct names.\n";
  }
  req.response_format = llm::ResponseFormat::StructuredObject;
  return req;
}

std::optional<FactorSet> parse_factor_set(std::string_view text, const std::string& task_id,
                                          FactorKey key, std::string& error) {
  auto extracted = extract_json_object(text);
  if (!extracted.object) {
    error = extracted.error;
    return std::nullopt;
  }
  const auto& obj = *extracted.object;
  auto it = obj.find("factors");
  if (it == obj.end() || !it->is_array()) {
    error = "response lacks a \"factors\" array";
    return std::nullopt;
  }
  FactorSet fs{task_id, key.dimension, key.level, {}};
  for (const auto& f : *it) {
    if (!f.is_object() || !f.contains("name") || !f["name"].is_string()) {
      error = "every factor needs a string \"name\"";
      return std::nullopt;
    }
    fs.factors.push_back({f["name"].get<std::string>(),
                          f.contains("description") && f["description"].is_string()
                              ? f["description"].get<std::string>()
                              : std::string{}});
  }
  return fs;
}

FactorGuide::FactorGuide(std::shared_ptr<llm::ChatBackend> backend, GuidanceConfig cfg)
    : backend_(std::move(backend)), cfg_(cfg) {}

ResearchReport FactorGuide::research(const TaskSpec& task, Dimension d, Level r) const {
  std::size_t last_length = 0;
  for (int attempt = 0; attempt <= cfg_.report_retries; ++attempt) {
    auto resp = backend_->complete(research_request(task, {d, r}, attempt, last_length));
    last_length = resp.text.size();
    if (resp.text.size() >= cfg_.min_report_chars && !resp.text.empty())
      return {task.id, d, r, std::move(resp.text)};
    log::warn(fmt::format("research report for {} too short ({} < {} characters)",
                          label({d, r}), resp.text.size(), cfg_.min_report_chars));
  }
  throw Error(ErrorCode::DegenerateReport,
              fmt::format("research report for {} stayed below {} characters after {} retries",
                          label({d, r}), cfg_.min_report_chars, cfg_.report_retries));
}

SummaryOutcome FactorGuide::summarize(const TaskSpec& task, const ResearchReport& report) const {
  if (report.body.empty()) throw Error(ErrorCode::InvalidArgument, "summarize: empty report");
  const FactorKey key{report.dimension, report.level};
  std::vector<std::string> violations;
  for (int attempt = 0; attempt <= cfg_.summary_retries; ++attempt) {
    auto resp = backend_->complete(summary_request(task, report, violations));
    std::string error;
    auto fs = parse_factor_set(resp.text, task.id, key, error);
    if (fs) {
      auto check = validate_factor_set(*fs);
      if (check.ok()) return {std::move(*fs), attempt};
      violations = std::move(check.violations);
    } else {
      violations = {error};
    }
  }
  std::string joined;
  for (const auto& v : violations) joined += (joined.empty() ? "" : "; ") + v;
  throw Error(ErrorCode::InvalidFactorSet,
              fmt::format("summary for {} invalid after {} retries: {}", label(key),
                          cfg_.summary_retries, joined));
}

GuidanceResult FactorGuide::guide(const TaskSpec& task) const {
  auto chain = [&](FactorKey key) {
    auto report = research(task, key.dimension, key.level);
    auto summary = summarize(task, report);
    return std::make_pair(std::move(report), std::move(summary.factors));
  };

  const auto& keys = all_factor_keys();
  std::vector<std::future<std::pair<ResearchReport, FactorSet>>> futures;
  for (const auto key : keys)
    futures.push_back(std::async(cfg_.concurrent ? std::launch::async : std::launch::deferred,
                                 chain, key));

  GuidanceResult out;
  std::optional<Error> first_error;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    try {
      auto [report, fs] = futures[i].get();
      out.reports.emplace(keys[i], std::move(report));
      out.factors.emplace(keys[i], std::move(fs));
    } catch (const Error& e) {
      if (!first_error) first_error = Error(e.code(), label(keys[i]) + ": " + e.what());
    }
  }
  if (first_error) throw *first_error;
  return out;
}

std::filesystem::path factor_cache_path(const std::filesystem::path& dir,
                                        const std::string& task_id) {
  return dir / (task_id + ".factors.json");
}

void save_factor_cache(const std::filesystem::path& path, const TaskSpec& task,
                       const GuidanceResult& result) {
  json sets = json::array();
  for (const auto key : all_factor_keys()) {
    json entry{{"pair", label(key)}, {"factor_set", result.factors.at(key)}};
    if (auto it = result.reports.find(key); it != result.reports.end())
      entry["report"] = it->second.body;
    sets.push_back(std::move(entry));
  }
  json doc{{"format", "urbanmas.factors/1"}, {"task", task}, {"sets", std::move(sets)}};
  write_text_file(path, doc.dump(2) + "\n");
}

GuidanceResult load_factor_cache(const std::filesystem::path& path) {
  auto doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.contains("sets"))
    throw Error(ErrorCode::Io, "factor cache " + path.string() + " is not valid");
  GuidanceResult out;
  for (const auto& entry : doc["sets"]) {
    auto fs = entry.at("factor_set").get<FactorSet>();
    auto check = validate_factor_set(fs);
    if (!check.ok())
      throw Error(ErrorCode::InvalidFactorSet,
                  "factor cache " + path.string() + ": " + label(fs.key()) + ": " +
                      check.violations.front());
    if (entry.contains("report"))
      out.reports.emplace(fs.key(), ResearchReport{fs.task_id, fs.dimension, fs.level,
                                                   entry["report"].get<std::string>()});
    out.factors.emplace(fs.key(), std::move(fs));
  }
  for (const auto key : all_factor_keys())
    if (!out.factors.count(key))
      throw Error(ErrorCode::InvalidFactorSet,
                  "factor cache " + path.string() + " lacks pair " + label(key));
  return out;
}

GuidanceResult guide_cached(const FactorGuide& guide, const TaskSpec& task,
                            const std::filesystem::path& dir, bool* hit) {
  const auto path = factor_cache_path(dir, task.id);
  if (std::filesystem::exists(path)) {
    if (hit) *hit = true;
    return load_factor_cache(path);
  }
  if (hit) *hit = false;
  auto result = guide.guide(task);
  save_factor_cache(path, task, result);
  return result;
}

}  // namespace urbanmas
