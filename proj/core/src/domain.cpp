#include "urbanmas/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "urbanmas/error.hpp"

namespace urbanmas {

std::string_view to_string(Dimension d) noexcept {
  return d == Dimension::Social ? "social" : "environment";
}

std::string_view to_string(Level r) noexcept { return r == Level::Macro ? "macro" : "street"; }

std::string_view display_name(Dimension d) noexcept {
  return d == Dimension::Social ? "Social" : "Built Environmental";
}

std::string_view display_name(Level r) noexcept { return r == Level::Macro ? "Macro" : "Street"; }

std::optional<Dimension> parse_dimension(std::string_view s) noexcept {
  if (s == "social") return Dimension::Social;
  if (s == "environment") return Dimension::BuiltEnvironmental;
  return std::nullopt;
}

std::optional<Level> parse_level(std::string_view s) noexcept {
  if (s == "macro") return Level::Macro;
  if (s == "street") return Level::Street;
  return std::nullopt;
}

std::string label(FactorKey key) {
  std::string out(to_string(key.dimension));
  out += '-';
  out += to_string(key.level);
  return out;
}

std::optional<FactorKey> parse_factor_key(std::string_view s) noexcept {
  const auto dash = s.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  auto d = parse_dimension(s.substr(0, dash));
  auto r = parse_level(s.substr(dash + 1));
  if (!d || !r) return std::nullopt;
  return FactorKey{*d, *r};
}

const std::array<FactorKey, 4>& all_factor_keys() noexcept {
  static const std::array<FactorKey, 4> keys{{
      {Dimension::Social, Level::Macro},
      {Dimension::Social, Level::Street},
      {Dimension::BuiltEnvironmental, Level::Macro},
      {Dimension::BuiltEnvironmental, Level::Street},
  }};
  return keys;
}

std::vector<std::string> validate_task(const TaskSpec& task) {
  std::vector<std::string> out;
  if (task.id.empty()) out.emplace_back("task id is empty");
  if (task.output_key.empty()) out.emplace_back("task '" + task.id + "' has empty output_key");
  return out;
}

void require_valid_tasks(const std::vector<TaskSpec>& tasks) {
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    auto v = validate_task(t);
    if (!v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
    if (!seen.insert(t.id).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate task id '" + t.id + "'");
  }
}

bool coordinates_in_range(double lat, double lon) noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

std::vector<std::string> validate_location(const LocationSample& sample) {
  std::vector<std::string> out;
  if (sample.id.empty()) out.emplace_back("location id is empty");
  if (!coordinates_in_range(sample.latitude, sample.longitude))
    out.emplace_back("location '" + sample.id + "' has coordinates out of range");
  for (const auto& poi : sample.pois) {
    if (!(poi.distance_m >= 0.0))
      out.emplace_back("location '" + sample.id + "' has POI '" + poi.name +
                       "' with negative distance");
  }
  for (const auto& [task, value] : sample.ground_truth) {
    if (!(value >= kOutputMin && value <= kOutputMax))
      out.emplace_back("location '" + sample.id + "' ground truth for '" + task +
                       "' outside [0, 10]");
  }
  return out;
}

void require_valid_location(const LocationSample& sample) {
  auto v = validate_location(sample);
  if (!v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
}

std::vector<std::string> FactorSet::names() const {
  std::vector<std::string> out;
  out.reserve(factors.size());
  for (const auto& f : factors) out.push_back(f.name);
  return out;
}

std::string normalize_factor_name(std::string_view name) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto begin = std::find_if_not(name.begin(), name.end(), is_space);
  auto end = std::find_if_not(name.rbegin(), std::make_reverse_iterator(begin), is_space).base();
  std::string out(begin, end);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

FactorSetValidation validate_factor_set(const FactorSet& fs) {
  FactorSetValidation result;
  auto& v = result.violations;
  if (fs.factors.size() != kFactorsPerSet) {
    v.push_back("count=" + std::to_string(fs.factors.size()) + ", expected " +
                std::to_string(kFactorsPerSet));
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < fs.factors.size(); ++i) {
    const auto& f = fs.factors[i];
    const auto norm = normalize_factor_name(f.name);
    if (norm.empty()) {
      v.push_back("factor #" + std::to_string(i + 1) + " has an empty name");
      continue;
    }
    if (f.name.find_first_of("\r\n") != std::string::npos)
      v.push_back("factor '" + norm + "' name contains a line break");
    if (normalize_factor_name(f.description).empty())
      v.push_back("factor '" + norm + "' has an empty description");
    if (!seen.insert(norm).second) v.push_back("duplicate factor name '" + norm + "'");
  }
  return result;
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::VariantA: return "variant_a";
    case Provenance::VariantB: return "variant_b";
    case Provenance::Refined: return "refined";
  }
  return "variant_a";
}

std::optional<Provenance> parse_provenance(std::string_view s) noexcept {
  if (s == "variant_a") return Provenance::VariantA;
  if (s == "variant_b") return Provenance::VariantB;
  if (s == "refined") return Provenance::Refined;
  return std::nullopt;
}

std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::Raw: return "raw";
    case RecordStatus::Stable: return "stable";
    case RecordStatus::Refined: return "refined";
    case RecordStatus::LowConfidence: return "low_confidence";
  }
  return "raw";
}

std::optional<RecordStatus> parse_record_status(std::string_view s) noexcept {
  if (s == "raw") return RecordStatus::Raw;
  if (s == "stable") return RecordStatus::Stable;
  if (s == "refined") return RecordStatus::Refined;
  if (s == "low_confidence") return RecordStatus::LowConfidence;
  return std::nullopt;
}

bool is_allowed_transition(RecordStatus from, RecordStatus to) noexcept {
  return from == RecordStatus::Raw && to != RecordStatus::Raw;
}

std::vector<std::string> UrbanInfoRecord::keys() const {
  std::vector<std::string> out;
  out.reserve(fields.size());
  for (const auto& f : fields) out.push_back(f.name);
  return out;
}

const FieldValue* UrbanInfoRecord::find(std::string_view name) const noexcept {
  for (const auto& f : fields)
    if (f.name == name) return &f.value;
  return nullptr;
}

std::vector<std::string> validate_record(const UrbanInfoRecord& record, const FactorSet& fs,
                                         int max_repair_rounds) {
  std::vector<std::string> out;
  if (record.key() != fs.key()) out.emplace_back("record and factor set cover different pairs");
  if (record.keys() != fs.names()) out.emplace_back("record keys differ from factor names");
  for (const auto& f : record.fields) {
    if (f.value.text.empty()) out.push_back("field '" + f.name + "' is empty");
    if (f.value.similarity && !(*f.value.similarity >= 0.0 && *f.value.similarity <= 1.0))
      out.push_back("field '" + f.name + "' similarity outside [0, 1]");
    if (f.value.repair_rounds < 0 || f.value.repair_rounds > max_repair_rounds)
      out.push_back("field '" + f.name + "' repair_rounds out of range");
  }
  return out;
}

std::optional<double> SimilarityReport::score(std::string_view field) const noexcept {
  for (const auto& [name, s] : per_field)
    if (name == field) return s;
  return std::nullopt;
}

bool SimilarityReport::is_conflicting(std::string_view field) const noexcept {
  return std::find(conflicting.begin(), conflicting.end(), field) != conflicting.end();
}

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoFactors: return "no_factors";
    case Variant::NoReliability: return "no_reliability";
    case Variant::SingleLlm: return "single_llm";
  }
  return "full";
}

std::optional<Variant> parse_variant(std::string_view s) noexcept {
  for (auto v : all_variants())
    if (to_string(v) == s) return v;
  return std::nullopt;
}

const std::array<Variant, 4>& all_variants() noexcept {
  static const std::array<Variant, 4> v{Variant::Full, Variant::NoFactors,
                                        Variant::NoReliability, Variant::SingleLlm};
  return v;
}

}  // namespace urbanmas
