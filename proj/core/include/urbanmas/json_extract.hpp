#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace urbanmas {

struct JsonExtraction {
  std::optional<nlohmann::json> object;
  std::string error;
};

/// Pulls a JSON object out of raw model output. Accepts a bare object, an
/// object wrapped in a ``` fence, or an object embedded in surrounding prose
/// (first '{' to last '}'). Anything that is not an object is an error.
JsonExtraction extract_json_object(std::string_view text);

}  // namespace urbanmas
