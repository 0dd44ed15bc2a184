#include "urbanmas/json_extract.hpp"

namespace urbanmas {

namespace {

std::optional<nlohmann::json> try_object(std::string_view text) {
  auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::string_view strip_fence(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return text;
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return text;
  ++body_start;
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return text.substr(body_start);
  return text.substr(body_start, close - body_start);
}

}  // namespace

JsonExtraction extract_json_object(std::string_view text) {
  if (auto j = try_object(text)) return {std::move(j), {}};

  const auto fenced = strip_fence(text);
  if (fenced.size() != text.size()) {
    if (auto j = try_object(fenced)) return {std::move(j), {}};
  }

  const auto first = text.find('{');
  const auto last = text.rfind('}');
  if (first != std::string_view::npos && last != std::string_view::npos && last > first) {
    if (auto j = try_object(text.substr(first, last - first + 1))) return {std::move(j), {}};
    return {std::nullopt, "response contains braces but no valid JSON object"};
  }
  return {std::nullopt, "response contains no JSON object"};
}

}  // namespace urbanmas
