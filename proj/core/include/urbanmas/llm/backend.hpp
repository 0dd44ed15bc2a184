#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace urbanmas::llm {

enum class ResponseFormat { FreeText, StructuredObject };

std::string_view to_string(ResponseFormat f) noexcept;

/// Agent labels attached to requests for accounting and audit. They are
/// metadata only and do not take part in the fingerprint.
namespace agents {
inline constexpr const char* kResearch = "research";
inline constexpr const char* kSummary = "summary";
inline constexpr const char* kExtract = "extract";
inline constexpr const char* kRefine = "refine";
inline constexpr const char* kInfer = "infer";
inline constexpr const char* kSingleLlm = "single_llm";
}  // namespace agents

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  std::vector<std::string> image_refs;
  ResponseFormat response_format = ResponseFormat::FreeText;
  /// Distinguishes independent generations of the same prompt.
  int variant_seed = 0;
  std::string agent;
};

struct ChatResponse {
  std::string text;
  double latency_ms = 0.0;
  std::string backend_id;
};

/// Throws Error(InvalidArgument) for empty prompts or a negative seed.
void validate_request(const ChatRequest& req);

/// SHA-256 over (system, user, sorted image refs, format, seed). Image order
/// and the agent label do not affect the result.
std::string fingerprint(const ChatRequest& req);

/// Every implementation must be safe for concurrent complete() calls.
/// Malformed model output is returned as-is; validation is the caller's job.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string id() const = 0;
};

/// Decorator counting calls in total and per agent label.
class CountingBackend final : public ChatBackend {
 public:
  explicit CountingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return inner_->id(); }

  std::size_t total() const noexcept { return total_.load(); }
  std::size_t count(std::string_view agent) const;
  std::map<std::string, std::size_t> by_agent() const;
  void reset();

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::atomic<std::size_t> total_{0};
  mutable std::mutex mu_;
  std::map<std::string, std::size_t, std::less<>> counts_;
};

}  // namespace urbanmas::llm
