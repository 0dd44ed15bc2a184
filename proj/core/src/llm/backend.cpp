#include "urbanmas/llm/backend.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "urbanmas/error.hpp"
#include "urbanmas/hashing.hpp"

namespace urbanmas::llm {

std::string_view to_string(ResponseFormat f) noexcept {
  return f == ResponseFormat::StructuredObject ? "structured_object" : "free_text";
}

void validate_request(const ChatRequest& req) {
  if (req.system_prompt.empty() || req.user_prompt.empty())
    throw Error(ErrorCode::InvalidArgument, "chat request has an empty prompt");
  if (req.variant_seed < 0)
    throw Error(ErrorCode::InvalidArgument, "chat request has a negative variant_seed");
}

std::string fingerprint(const ChatRequest& req) {
  auto images = req.image_refs;
  std::sort(images.begin(), images.end());
  // A JSON array gives unambiguous framing between the fields.
  const nlohmann::json canonical = nlohmann::json::array(
      {req.system_prompt, req.user_prompt, images, to_string(req.response_format),
       req.variant_seed});
  return sha256_hex(canonical.dump());
}

ChatResponse CountingBackend::complete(const ChatRequest& req) {
  ++total_;
  {
    std::lock_guard lock(mu_);
    ++counts_[req.agent];
  }
  return inner_->complete(req);
}

std::size_t CountingBackend::count(std::string_view agent) const {
  std::lock_guard lock(mu_);
  auto it = counts_.find(agent);
  return it == counts_.end() ? 0 : it->second;
}

std::map<std::string, std::size_t> CountingBackend::by_agent() const {
  std::lock_guard lock(mu_);
  return {counts_.begin(), counts_.end()};
}

void CountingBackend::reset() {
  std::lock_guard lock(mu_);
  counts_.clear();
  total_ = 0;
}

}  // namespace urbanmas::llm
