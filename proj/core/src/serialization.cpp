#include "urbanmas/serialization.hpp"

#include "urbanmas/error.hpp"

namespace urbanmas {

using nlohmann::json;

namespace {

template <class T, class Parser>
T parse_enum(const json& j, const char* what, Parser parser) {
  const auto s = j.get<std::string>();
  auto v = parser(s);
  if (!v) throw Error(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

}  // namespace

void to_json(json& j, const TaskSpec& t) {
  j = json{{"id", t.id}, {"description", t.description}, {"output_key", t.output_key}};
}

void from_json(const json& j, TaskSpec& t) {
  t.id = j.at("id").get<std::string>();
  t.description = j.value("description", std::string{});
  t.output_key = j.value("output_key", t.id);
}

void to_json(json& j, const PoiEntry& p) {
  j = json{{"name", p.name}, {"category", p.category}, {"distance_m", p.distance_m}};
}

void from_json(const json& j, PoiEntry& p) {
  p.name = j.at("name").get<std::string>();
  p.category = j.value("category", std::string{});
  p.distance_m = j.at("distance_m").get<double>();
}

void to_json(json& j, const LocationSample& s) {
  j = json{{"id", s.id}, {"lat", s.latitude}, {"lon", s.longitude}, {"city", s.city}};
  j["ground_truth"] = s.ground_truth;
  if (s.address) j["address"] = *s.address;
  if (!s.pois.empty()) j["pois"] = s.pois;
  if (!s.streetview_refs.empty()) j["streetview_refs"] = s.streetview_refs;
}

void from_json(const json& j, LocationSample& s) {
  s.id = j.at("id").get<std::string>();
  s.latitude = j.at("lat").get<double>();
  s.longitude = j.at("lon").get<double>();
  s.city = j.value("city", std::string{});
  s.ground_truth.clear();
  if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null())
    s.ground_truth = it->get<std::map<std::string, double>>();
  s.address.reset();
  if (auto it = j.find("address"); it != j.end() && !it->is_null())
    s.address = it->get<std::string>();
  s.pois = j.value("pois", std::vector<PoiEntry>{});
  s.streetview_refs = j.value("streetview_refs", std::vector<std::string>{});
}

void to_json(json& j, const PredictiveFactor& f) {
  j = json{{"name", f.name}, {"description", f.description}};
}

void from_json(const json& j, PredictiveFactor& f) {
  f.name = j.at("name").get<std::string>();
  f.description = j.value("description", std::string{});
}

void to_json(json& j, const FactorSet& fs) {
  j = json{{"task_id", fs.task_id},
           {"dimension", to_string(fs.dimension)},
           {"level", to_string(fs.level)},
           {"factors", fs.factors}};
}

void from_json(const json& j, FactorSet& fs) {
  fs.task_id = j.at("task_id").get<std::string>();
  fs.dimension = parse_enum<Dimension>(j.at("dimension"), "dimension", parse_dimension);
  fs.level = parse_enum<Level>(j.at("level"), "level", parse_level);
  fs.factors = j.at("factors").get<std::vector<PredictiveFactor>>();
}

void to_json(json& j, const UrbanInfoRecord& r) {
  json fields = json::array();
  for (const auto& f : r.fields) {
    json fj{{"name", f.name},
            {"text", f.value.text},
            {"provenance", to_string(f.value.provenance)},
            {"repair_rounds", f.value.repair_rounds}};
    if (f.value.similarity) fj["similarity"] = *f.value.similarity;
    fields.push_back(std::move(fj));
  }
  j = json{{"location_id", r.location_id},
           {"task_id", r.task_id},
           {"dimension", to_string(r.dimension)},
           {"level", to_string(r.level)},
           {"status", to_string(r.status)},
           {"fields", std::move(fields)}};
}

void from_json(const json& j, UrbanInfoRecord& r) {
  r.location_id = j.at("location_id").get<std::string>();
  r.task_id = j.at("task_id").get<std::string>();
  r.dimension = parse_enum<Dimension>(j.at("dimension"), "dimension", parse_dimension);
  r.level = parse_enum<Level>(j.at("level"), "level", parse_level);
  r.status = parse_enum<RecordStatus>(j.at("status"), "status", parse_record_status);
  r.fields.clear();
  for (const auto& fj : j.at("fields")) {
    UrbanInfoField f;
    f.name = fj.at("name").get<std::string>();
    f.value.text = fj.at("text").get<std::string>();
    f.value.provenance =
        parse_enum<Provenance>(fj.at("provenance"), "provenance", parse_provenance);
    f.value.repair_rounds = fj.value("repair_rounds", 0);
    if (auto it = fj.find("similarity"); it != fj.end()) f.value.similarity = it->get<double>();
    r.fields.push_back(std::move(f));
  }
}

void to_json(json& j, const SimilarityReport& r) {
  json per_field = json::array();
  for (const auto& [name, score] : r.per_field)
    per_field.push_back(json{{"field", name}, {"score", score}});
  j = json{{"per_field", std::move(per_field)},
           {"aggregate", r.aggregate},
           {"conflicting", r.conflicting},
           {"threshold", r.threshold}};
}

void to_json(json& j, const PredictionOutput& p) {
  j = json{{"location_id", p.location_id},
           {"task_id", p.task_id},
           {"variant", to_string(p.variant)},
           {"value", p.value},
           {"clamped", p.clamped}};
  if (p.rationale) j["rationale"] = *p.rationale;
}

void from_json(const json& j, PredictionOutput& p) {
  p.location_id = j.at("location_id").get<std::string>();
  p.task_id = j.at("task_id").get<std::string>();
  p.variant = parse_enum<Variant>(j.at("variant"), "variant", parse_variant);
  p.value = j.at("value").get<double>();
  p.clamped = j.value("clamped", false);
  p.rationale.reset();
  if (auto it = j.find("rationale"); it != j.end() && it->is_string())
    p.rationale = it->get<std::string>();
}

}  // namespace urbanmas
