#include "urbanmas/llm/mock_backend.hpp"

#include <array>
#include <cstdint>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "urbanmas/domain.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/prompts.hpp"

namespace urbanmas::llm {

ChatResponse MockBackend::complete(const ChatRequest& req) {
  validate_request(req);
  return {responder_(req.system_prompt, req.user_prompt, req.variant_seed), 0.0, id_};
}

std::shared_ptr<MockBackend> MockBackend::synthetic() {
  return std::make_shared<MockBackend>(&synthetic_response, "mock-synthetic");
}

std::string_view find_prefixed_line(std::string_view text, std::string_view prefix) noexcept {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (line.substr(0, prefix.size()) == prefix) return line.substr(prefix.size());
    pos = end + 1;
  }
  return {};
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix(std::string_view a, std::string_view b, std::uint64_t salt = 0) {
  return fnv1a(b, fnv1a(a, 1469598103934665603ULL ^ (salt * 0x9E3779B97F4A7C15ULL)));
}

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

struct VocabEntry {
  const char* name;
  const char* description;
};

using Vocab = std::array<VocabEntry, 6>;

const Vocab& vocabulary(FactorKey key) {
  static const Vocab social_macro{{
      {"Population density", "Residents per square kilometre in the surrounding district."},
      {"Median household income", "Median annual household income of the local census area."},
      {"Age structure", "Share of residents aged 20 to 45 in the district."},
      {"Student share", "Proportion of the population enrolled in higher education."},
      {"Reported crime rate", "Recorded offences per thousand residents per year."},
      {"Community event frequency", "Number of public community events held nearby per month."},
  }};
  static const Vocab social_street{{
      {"Pedestrian presence", "Typical count of pedestrians visible on the street segment."},
      {"Street vendor activity", "Presence of kiosks, stalls or mobile vendors on the street."},
      {"Outdoor seating", "Availability of cafe or bench seating facing the street."},
      {"Visible social interaction", "Groups of people talking or gathering in public view."},
      {"Perceived safety cues", "Signs of surveillance, maintenance and natural supervision."},
      {"Families and children", "Visible presence of children, strollers or play facilities."},
  }};
  static const Vocab env_macro{{
      {"Green space coverage", "Share of land within 1 km covered by parks and vegetation."},
      {"Land-use mix", "Entropy of residential, commercial and civic land uses nearby."},
      {"Street network connectivity", "Intersection density of the walkable street network."},
      {"Waterfront proximity", "Distance from the site to the nearest river or coastline."},
      {"Public transit access", "Number of rail or bus stops within walking distance."},
      {"Terrain slope", "Average gradient of streets in the surrounding area."},
  }};
  static const Vocab env_street{{
      {"Tree canopy", "Fraction of the street view covered by tree foliage."},
      {"Sidewalk quality", "Width, continuity and surface condition of sidewalks."},
      {"Traffic volume", "Density of moving motor vehicles on the street."},
      {"Facade variety", "Diversity of building frontages and ground-floor uses."},
      {"Street lighting", "Density and coverage of street lamps along the segment."},
      {"Sky openness", "Share of visible sky in the street-level view."},
  }};
  switch (key.dimension) {
    case Dimension::Social: return key.level == Level::Macro ? social_macro : social_street;
    case Dimension::BuiltEnvironmental: return key.level == Level::Macro ? env_macro : env_street;
  }
  return social_macro;
}

FactorKey key_from_prompt(std::string_view user) {
  const auto d = find_prefixed_line(user, prompts::kDimensionPrefix);
  const auto r = find_prefixed_line(user, prompts::kLevelPrefix);
  FactorKey key{Dimension::Social, Level::Macro};
  if (d == display_name(Dimension::BuiltEnvironmental)) key.dimension = Dimension::BuiltEnvironmental;
  if (r == display_name(Level::Street)) key.level = Level::Street;
  return key;
}

std::string research_report(std::string_view user) {
  const auto task = find_prefixed_line(user, prompts::kTaskPrefix);
  const auto key = key_from_prompt(user);
  std::string out = fmt::format(
      "Research summary for the task \"{}\" at the {} dimension and {} level.\n"
      "Prior empirical work on human-centered urban outcomes points to a consistent set of "
      "determinants at this scale. The six most influential predictive factors are:\n",
      task, display_name(key.dimension), display_name(key.level));
  int i = 1;
  for (const auto& v : vocabulary(key)) out += fmt::format("{}. {}: {}\n", i++, v.name, v.description);
  out +=
      "Together these factors capture the dominant mechanisms reported in the literature and "
      "are measurable from commonly available urban data.\n";
  return out;
}

// Reads "N. Name: description" lines from the quoted report.
std::string summary_response(std::string_view user) {
  nlohmann::json factors = nlohmann::json::array();
  std::size_t pos = 0;
  while (pos < user.size()) {
    auto end = user.find('\n', pos);
    if (end == std::string_view::npos) end = user.size();
    auto line = user.substr(pos, end - pos);
    pos = end + 1;
    if (line.size() < 3 || line[0] < '1' || line[0] > '9' || line[1] != '.') continue;
    auto body = line.substr(3);
    auto colon = body.find(": ");
    if (colon == std::string_view::npos) continue;
    factors.push_back({{"name", std::string(body.substr(0, colon))},
                       {"description", std::string(body.substr(colon + 2))}});
  }
  return nlohmann::json{{"factors", factors}}.dump();
}

constexpr std::array<const char*, 8> kIntensity{"high", "moderate", "low", "sparse",
                                                "dense", "limited", "abundant", "noticeable"};
constexpr std::array<const char*, 6> kContext{
    "nearby commercial frontage", "quiet residential blocks", "a busy transit corridor",
    "open public spaces", "mixed-use streets", "waterfront access"};

std::string stable_value(std::string_view context, std::string_view key) {
  const auto h = mix(context, key);
  return fmt::format("{} {} around the location, shaped by {}", kIntensity[h % kIntensity.size()],
                     key, kContext[(h >> 8) % kContext.size()]);
}

std::string divergent_value(std::string_view context, std::string_view key, std::uint64_t salt) {
  const auto h = mix(context, key, salt);
  return fmt::format("uncertain evidence; sources disagree and suggest {} conditions only",
                     kIntensity[(h >> 16) % kIntensity.size()]);
}

// Extraction fields diverge on seed 1 for roughly one key in six.
bool diverges(std::string_view context, std::string_view key, int seed) {
  return seed == 1 && mix(context, key, 7) % 6 == 0;
}

std::string extract_response(std::string_view user, int seed) {
  const auto keys_line = find_prefixed_line(user, prompts::kRequiredKeysPrefix);
  auto keys = nlohmann::json::parse(keys_line, nullptr, false);
  if (keys.is_discarded() || !keys.is_array()) return "I could not find the requested keys.";
  // The variant seed must not leak into the context hash, or both variants
  // would always disagree.
  const auto context = user.substr(0, user.find(prompts::kRequiredKeysPrefix));
  nlohmann::json out = nlohmann::json::object();
  for (const auto& k : keys) {
    const auto key = k.get<std::string>();
    out[key] = diverges(context, key, seed) ? divergent_value(context, key, 1)
                                            : stable_value(context, key);
  }
  return out.dump();
}

// The refiner mostly returns the variant A description; a deterministic
// subset of (field, round) pairs stays divergent.
std::string refine_response(std::string_view user) {
  const auto field = find_prefixed_line(user, prompts::kFieldPrefix);
  const auto a = find_prefixed_line(user, prompts::kVariantAPrefix);
  const auto round = find_prefixed_line(user, prompts::kRoundPrefix);
  std::string value;
  if (mix(a, round, 11) % 5 == 0) {
    value = divergent_value(a, field, 3);
  } else {
    value = std::string(a);
  }
  return nlohmann::json{{"value", value}}.dump();
}

std::string infer_response(std::string_view user) {
  const auto key = find_prefixed_line(user, prompts::kOutputKeyPrefix);
  const auto h = fnv1a(user);
  const double value = static_cast<double>(h % 1001) / 100.0;
  nlohmann::json out{{std::string(key.empty() ? "value" : key), value},
                     {"rationale", "Estimated from the combined location evidence."}};
  return out.dump();
}

}  // namespace

std::string synthetic_response(std::string_view system, std::string_view user, int seed) {
  if (contains(system, prompts::kResearchRole)) return research_report(user);
  if (contains(system, prompts::kSummaryRole)) return summary_response(user);
  if (contains(system, prompts::kExtractRole)) return extract_response(user, seed);
  if (contains(system, prompts::kRefineRole)) return refine_response(user);
  if (contains(system, prompts::kInferRole) || contains(system, prompts::kSingleLlmRole))
    return infer_response(user);
  return "This mock backend does not recognise the request.";
}

}  // namespace urbanmas::llm
