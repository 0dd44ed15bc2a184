#include "urbanmas/extraction.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>

#include "urbanmas/error.hpp"
#include "urbanmas/json_extract.hpp"
#include "urbanmas/prompts.hpp"
#include "urbanmas/serialization.hpp"

namespace urbanmas {

using nlohmann::json;

namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Cuts after `max_chars` code points.
std::string truncate_utf8(std::string s, std::size_t max_chars) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (count == max_chars) {
        s.resize(i);
        break;
      }
      ++count;
    }
  }
  return s;
}

std::string factor_keys_json(const FactorSet& fs) { return json(fs.names()).dump(); }

std::string pair_header(FactorKey key) {
  return fmt::format("{}{}\n{}{}\n", prompts::kDimensionPrefix, display_name(key.dimension),
                     prompts::kLevelPrefix, display_name(key.level));
}

}  // namespace

std::string render_location_context(const LocationSample& sample, std::size_t poi_limit) {
  std::string out = fmt::format("Location: {}\nCity: {}\nCoordinates: {:.6f}, {:.6f}\nAddress: {}\n",
                                sample.id, sample.city.empty() ? "unknown" : sample.city,
                                sample.latitude, sample.longitude,
                                sample.address ? one_line(*sample.address) : "unknown");
  auto pois = sample.pois;
  std::stable_sort(pois.begin(), pois.end(), [](const PoiEntry& a, const PoiEntry& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.name < b.name;
  });
  if (pois.size() > poi_limit) pois.resize(poi_limit);
  if (pois.empty()) {
    out += "Nearby points of interest: none recorded\n";
  } else {
    out += "Nearby points of interest (closest first):\n";
    for (const auto& p : pois)
      out += fmt::format("- {} ({}, {:.0f} m)\n", one_line(p.name), p.category, p.distance_m);
  }
  return out;
}

ExtractionPrompt build_prompt(const LocationSample& sample, const FactorSet& fs,
                              const ExtractionConfig& cfg) {
  ExtractionPrompt p;
  p.system = std::string(prompts::kExtractRole) +
             fmt::format(
                 "\nExtract the following factors for this location as a structured object. "
                 "For every factor give one short factual description of at most {} characters "
                 "based on the location context and your knowledge of the area. Respond with a "
                 "JSON object whose keys are exactly the required keys and whose values are "
                 "strings.",
                 cfg.max_value_chars);
  p.user = render_location_context(sample, cfg.poi_digest_limit) + pair_header(fs.key()) +
           "Factors:\n";
  for (const auto& f : fs.factors) p.user += fmt::format("- {}: {}\n", f.name, one_line(f.description));
  if (fs.level == Level::Street && !sample.streetview_refs.empty())
    p.user += fmt::format("Street-view images attached: {}\n", sample.streetview_refs.size());
  p.user += std::string(prompts::kRequiredKeysPrefix) + factor_keys_json(fs) + "\n";
  if (fs.level == Level::Street) p.image_refs = sample.streetview_refs;
  return p;
}

ParsedRecord parse_record(std::string_view text, const FactorSet& fs, std::size_t max_chars) {
  ParsedRecord out;
  auto extracted = extract_json_object(text);
  if (!extracted.object) {
    out.error = extracted.error;
    out.missing = fs.names();
    return out;
  }
  for (const auto& name : fs.names()) {
    auto it = extracted.object->find(name);
    std::string v;
    if (it != extracted.object->end()) {
      if (it->is_string()) {
        v = trim(it->get<std::string>());
      } else if (it->is_number() || it->is_boolean()) {
        v = it->dump();
      }
    }
    if (v.empty()) {
      out.missing.push_back(name);
    } else {
      out.values.emplace(name, truncate_utf8(std::move(v), max_chars));
    }
  }
  return out;
}

UrbanInfoRecord assemble_record(const LocationSample& sample, const FactorSet& fs,
                                const std::map<std::string, std::string>& values,
                                Provenance provenance) {
  UrbanInfoRecord rec{sample.id, fs.task_id, fs.dimension, fs.level, {}, RecordStatus::Raw};
  for (const auto& name : fs.names())
    rec.fields.push_back({name, FieldValue{values.at(name), provenance, std::nullopt, 0}});
  return rec;
}

nlohmann::json to_json(const PairTranscript& t) {
  json j{{"pair", label(t.key)},
         {"prompt",
          {{"system", t.prompt.system}, {"user", t.prompt.user}, {"image_refs", t.prompt.image_refs}}},
         {"variant_a", t.variant_a},
         {"final", t.final_record},
         {"reasks", t.reasks},
         {"refine_calls", t.refine_calls}};
  j["variant_b"] = t.variant_b ? json(*t.variant_b) : json(nullptr);
  j["similarity"] = t.report ? json(*t.report) : json(nullptr);
  return j;
}

Extractor::Extractor(std::shared_ptr<llm::ChatBackend> backend, ExtractionConfig cfg,
                     ReliabilityConfig rel)
    : backend_(std::move(backend)), cfg_(cfg), rel_(rel) {
  validate(rel_);
}

UrbanInfoRecord Extractor::extract_one(const LocationSample& sample, const FactorSet& fs,
                                       const ExtractionPrompt& prompt, int seed,
                                       int& reasks) const {
  llm::ChatRequest req{prompt.system, prompt.user, prompt.image_refs,
                       llm::ResponseFormat::StructuredObject, seed, llm::agents::kExtract};
  const auto provenance = seed == 0 ? Provenance::VariantA : Provenance::VariantB;
  auto parsed = parse_record(backend_->complete(req).text, fs, cfg_.max_value_chars);
  if (parsed.complete()) return assemble_record(sample, fs, parsed.values, provenance);

  // One re-ask naming what was wrong; values already supplied are kept.
  ++reasks;
  std::string problem = parsed.error.empty() ? "" : parsed.error + ". ";
  problem += "Missing keys: " + json(parsed.missing).dump() + ".";
  req.user_prompt += "Your previous answer was incomplete. " + problem +
                     " Return the complete JSON object with every required key.\n";
  auto retry = parse_record(backend_->complete(req).text, fs, cfg_.max_value_chars);
  auto values = parsed.values;
  for (auto& [k, v] : retry.values) values.emplace(k, std::move(v));
  if (values.size() == fs.factors.size()) return assemble_record(sample, fs, values, provenance);

  std::vector<std::string> still;
  for (const auto& name : fs.names())
    if (!values.count(name)) still.push_back(name);
  throw Error(ErrorCode::ParseFailure,
              fmt::format("extractor {} (variant {}) returned unusable output after re-ask: {}{}",
                          label(fs.key()), seed == 0 ? "A" : "B",
                          retry.error.empty() ? "" : retry.error + "; ",
                          "missing " + json(still).dump()));
}

std::pair<UrbanInfoRecord, UrbanInfoRecord> Extractor::extract_variants(
    const LocationSample& sample, const FactorSet& fs, int* reasks) const {
  const auto prompt = build_prompt(sample, fs, cfg_);
  int count = 0;
  auto a = extract_one(sample, fs, prompt, 0, count);
  auto b = extract_one(sample, fs, prompt, 1, count);
  if (reasks) *reasks = count;
  return {std::move(a), std::move(b)};
}

std::string Extractor::refine_field(const LocationSample& sample, const FactorSet& fs,
                                    const RefineRequest& r) const {
  std::string definition;
  for (const auto& f : fs.factors)
    if (f.name == r.field) definition = one_line(f.description);

  llm::ChatRequest req;
  req.agent = llm::agents::kRefine;
  req.response_format = llm::ResponseFormat::StructuredObject;
  req.system_prompt =
      std::string(prompts::kRefineRole) +
      "\nTwo independent extractions of one factor disagree. Resolve the conflict and give a "
      "corrected, factual description of the factor for this location. Respond with a JSON "
      "object {\"value\": \"...\"} and nothing else.";
  req.user_prompt = render_location_context(sample, cfg_.poi_digest_limit) + pair_header(fs.key()) +
                    prompts::kFieldPrefix + r.field + "\nDefinition: " + definition + "\n" +
                    prompts::kVariantAPrefix + one_line(r.value_a) + "\n" +
                    prompts::kVariantBPrefix + one_line(r.value_b) + "\n";
  if (r.round > 1) req.user_prompt += "Previous refinement: " + one_line(r.previous) + "\n";
  req.user_prompt += prompts::kRoundPrefix + std::to_string(r.round) + "\n";
  if (fs.level == Level::Street) req.image_refs = sample.streetview_refs;

  const auto text = backend_->complete(req).text;
  auto extracted = extract_json_object(text);
  std::string value;
  if (extracted.object) {
    if (auto it = extracted.object->find("value"); it != extracted.object->end() && it->is_string())
      value = trim(it->get<std::string>());
  } else {
    value = trim(text);
  }
  if (value.empty())
    throw Error(ErrorCode::RefineFailure, "refiner returned no usable value");
  return truncate_utf8(std::move(value), cfg_.max_value_chars);
}

PairTranscript Extractor::extract_unchecked(const LocationSample& sample,
                                            const FactorSet& fs) const {
  PairTranscript t;
  t.key = fs.key();
  t.prompt = build_prompt(sample, fs, cfg_);
  t.variant_a = extract_one(sample, fs, t.prompt, 0, t.reasks);
  t.final_record = t.variant_a;
  return t;
}

PairTranscript Extractor::extract_pair(const LocationSample& sample, const FactorSet& fs) const {
  PairTranscript t;
  t.key = fs.key();
  t.prompt = build_prompt(sample, fs, cfg_);
  t.variant_a = extract_one(sample, fs, t.prompt, 0, t.reasks);
  t.variant_b = extract_one(sample, fs, t.prompt, 1, t.reasks);
  t.report = evaluate(t.variant_a, *t.variant_b, rel_);
  int calls = 0;
  RefineFn refine = [&](const RefineRequest& r) {
    ++calls;
    return refine_field(sample, fs, r);
  };
  t.final_record = reconcile(t.variant_a, *t.variant_b, *t.report, refine, rel_);
  t.refine_calls = calls;
  return t;
}

template <class Fn>
std::map<FactorKey, PairTranscript> Extractor::for_each_pair(const FactorMap& factors,
                                                             Fn fn) const {
  const auto& keys = all_factor_keys();
  for (const auto key : keys) {
    auto it = factors.find(key);
    if (it == factors.end())
      throw Error(ErrorCode::MissingRecords, "no factor set for pair " + label(key));
    if (it->second.key() != key)
      throw Error(ErrorCode::InvalidArgument, "factor set filed under the wrong pair " + label(key));
  }
  std::vector<std::future<PairTranscript>> futures;
  for (const auto key : keys)
    futures.push_back(std::async(cfg_.concurrent ? std::launch::async : std::launch::deferred,
                                 [&, key] { return fn(factors.at(key)); }));
  std::map<FactorKey, PairTranscript> out;
  std::optional<Error> first_error;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    try {
      out.emplace(keys[i], futures[i].get());
    } catch (const Error& e) {
      if (!first_error) first_error = Error(e.code(), label(keys[i]) + ": " + e.what());
    }
  }
  if (first_error) throw *first_error;
  return out;
}

std::map<FactorKey, PairTranscript> Extractor::extract_reliable(const LocationSample& sample,
                                                                const FactorMap& factors) const {
  return for_each_pair(factors, [&](const FactorSet& fs) { return extract_pair(sample, fs); });
}

std::map<FactorKey, PairTranscript> Extractor::extract_all_unchecked(
    const LocationSample& sample, const FactorMap& factors) const {
  return for_each_pair(factors,
                       [&](const FactorSet& fs) { return extract_unchecked(sample, fs); });
}

}  // namespace urbanmas
