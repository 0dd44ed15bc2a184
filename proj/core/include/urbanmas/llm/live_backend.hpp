#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "urbanmas/http.hpp"
#include "urbanmas/llm/backend.hpp"
#include "urbanmas/llm/rate_limiter.hpp"

namespace urbanmas::llm {

struct LiveConfig {
  std::string api_base = "https://api.openai.com/v1";
  std::string api_key;
  std::string model = "gpt-5";
  std::optional<double> temperature;
  std::optional<double> top_p;
  /// Forwarded as the request "seed" so sampling can be pinned by the run.
  std::optional<long long> seed;
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{500};
  std::size_t max_in_flight = 4;
  double requests_per_minute = 60.0;
  std::chrono::milliseconds timeout{120000};

  /// Overlays URBANMAS_API_KEY, URBANMAS_API_BASE and URBANMAS_MODEL when set.
  static LiveConfig from_env(LiveConfig base);
  static LiveConfig from_env();
};

/// OpenAI-compatible chat-completions client. Transient failures (transport
/// errors, 408, 429, 5xx) are retried with exponential backoff; 401/403 fail
/// immediately. Calls pass a token bucket and an in-flight bound.
class LiveBackend final : public ChatBackend {
 public:
  LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport,
              NowFn now = system_now(), SleepFn sleep = system_sleep());

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "live:" + config_.model; }

  std::size_t tokens_used() const noexcept { return tokens_used_.load(); }
  std::size_t peak_in_flight() const { return in_flight_.peak(); }

  /// Request body for `req`; exposed for tests.
  std::string build_body(const ChatRequest& req) const;

 private:
  LiveConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  NowFn now_;
  SleepFn sleep_;
  TokenBucket bucket_;
  InFlightLimiter in_flight_;
  std::atomic<std::size_t> tokens_used_{0};
};

}  // namespace urbanmas::llm
