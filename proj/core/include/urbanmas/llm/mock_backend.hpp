#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "urbanmas/llm/backend.hpp"

namespace urbanmas::llm {

/// Deterministic backend: the response is a pure function of the system
/// prompt, user prompt and variant seed. Image refs and agent labels are not
/// visible to the responder.
class MockBackend final : public ChatBackend {
 public:
  using Responder =
      std::function<std::string(std::string_view system, std::string_view user, int seed)>;

  explicit MockBackend(Responder responder, std::string id = "mock")
      : responder_(std::move(responder)), id_(std::move(id)) {}

  /// Backend driven by the built-in synthetic responder.
  static std::shared_ptr<MockBackend> synthetic();

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return id_; }

 private:
  Responder responder_;
  std::string id_;
};

/// Built-in responder that recognises every agent prompt produced by this
/// library and answers with plausible, well-formed output. Variant seed 1
/// diverges from seed 0 on a deterministic subset of extraction fields, so the
/// reliability layer has conflicts to repair.
std::string synthetic_response(std::string_view system, std::string_view user, int seed);

/// Returns the remainder of the first line starting with `prefix`, or empty.
std::string_view find_prefixed_line(std::string_view text, std::string_view prefix) noexcept;

}  // namespace urbanmas::llm
