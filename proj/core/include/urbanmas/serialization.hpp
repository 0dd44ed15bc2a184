#pragma once

#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"

// JSON mappings for the domain vocabulary. Field order inside an
// UrbanInfoRecord is preserved by encoding fields as an array.

namespace urbanmas {

void to_json(nlohmann::json& j, const TaskSpec& t);
void from_json(const nlohmann::json& j, TaskSpec& t);

void to_json(nlohmann::json& j, const PoiEntry& p);
void from_json(const nlohmann::json& j, PoiEntry& p);

/// Dataset line schema: id, lat, lon, city, ground_truth, and optionally
/// address, pois, streetview_refs.
void to_json(nlohmann::json& j, const LocationSample& s);
void from_json(const nlohmann::json& j, LocationSample& s);

void to_json(nlohmann::json& j, const PredictiveFactor& f);
void from_json(const nlohmann::json& j, PredictiveFactor& f);

void to_json(nlohmann::json& j, const FactorSet& fs);
void from_json(const nlohmann::json& j, FactorSet& fs);

void to_json(nlohmann::json& j, const UrbanInfoRecord& r);
void from_json(const nlohmann::json& j, UrbanInfoRecord& r);

void to_json(nlohmann::json& j, const SimilarityReport& r);

/// Prediction file line: location_id, task_id, variant, value, clamped
/// (plus rationale when present).
void to_json(nlohmann::json& j, const PredictionOutput& p);
void from_json(const nlohmann::json& j, PredictionOutput& p);

}  // namespace urbanmas
