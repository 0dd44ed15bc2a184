#include "urbanmas/llm/live_backend.hpp"

#include <cstdlib>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/logging.hpp"

namespace urbanmas::llm {

using nlohmann::json;

LiveConfig LiveConfig::from_env() { return from_env(LiveConfig{}); }

LiveConfig LiveConfig::from_env(LiveConfig base) {
  if (const char* v = std::getenv("URBANMAS_API_KEY"); v && *v) base.api_key = v;
  if (const char* v = std::getenv("URBANMAS_API_BASE"); v && *v) base.api_base = v;
  if (const char* v = std::getenv("URBANMAS_MODEL"); v && *v) base.model = v;
  return base;
}

namespace {

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

// Remote references pass through; local files are inlined as data URLs.
std::string image_url(const std::string& ref) {
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0 || ref.rfind("data:", 0) == 0)
    return ref;
  const auto ext = std::filesystem::path(ref).extension().string();
  const char* mime = (ext == ".png") ? "image/png" : "image/jpeg";
  return std::string("data:") + mime + ";base64," + base64(read_text_file(ref));
}

bool retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

}  // namespace

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport, NowFn now,
                         SleepFn sleep)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      now_(now),
      sleep_(sleep),
      bucket_(config_.requests_per_minute, 1.0, now, sleep),
      in_flight_(config_.max_in_flight) {
  if (config_.max_attempts < 1) throw Error(ErrorCode::Config, "max_attempts must be >= 1");
}

std::string LiveBackend::build_body(const ChatRequest& req) const {
  json user_content;
  if (req.image_refs.empty()) {
    user_content = req.user_prompt;
  } else {
    user_content = json::array({{{"type", "text"}, {"text", req.user_prompt}}});
    for (const auto& ref : req.image_refs)
      user_content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url(ref)}}}});
  }
  json body{{"model", config_.model},
            {"messages",
             json::array({{{"role", "system"}, {"content", req.system_prompt}},
                          {{"role", "user"}, {"content", user_content}}})}};
  if (req.response_format == ResponseFormat::StructuredObject)
    body["response_format"] = {{"type", "json_object"}};
  if (config_.temperature) body["temperature"] = *config_.temperature;
  if (config_.top_p) body["top_p"] = *config_.top_p;
  if (config_.seed) body["seed"] = *config_.seed;
  return body.dump();
}

ChatResponse LiveBackend::complete(const ChatRequest& req) {
  validate_request(req);
  if (config_.api_key.empty())
    throw Error(ErrorCode::AuthenticationFailure, "URBANMAS_API_KEY is not set");

  HttpRequest http;
  http.method = "POST";
  http.url = config_.api_base + "/chat/completions";
  http.headers = {{"Authorization", "Bearer " + config_.api_key}};
  http.body = build_body(req);
  http.timeout = config_.timeout;

  std::string last_error;
  auto backoff = config_.base_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    bucket_.acquire();
    HttpResponse res;
    const auto start = now_();
    {
      InFlightLimiter::Guard guard(in_flight_);
      res = transport_->send(http);
    }
    const double latency =
        std::chrono::duration<double, std::milli>(now_() - start).count();

    if (res.status == 401 || res.status == 403)
      throw Error(ErrorCode::AuthenticationFailure,
                  "chat backend rejected credentials (HTTP " + std::to_string(res.status) + ")");
    if (res.status >= 200 && res.status < 300) {
      auto j = json::parse(res.body, nullptr, false);
      if (j.is_discarded())
        throw Error(ErrorCode::ParseFailure, "chat backend returned non-JSON body");
      std::string text;
      try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        text = content.is_string() ? content.get<std::string>() : content.dump();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseFailure,
                    std::string("chat backend response lacks choices[0].message.content: ") +
                        e.what());
      }
      if (auto u = j.find("usage"); u != j.end() && u->contains("total_tokens"))
        tokens_used_ += u->at("total_tokens").get<std::size_t>();
      return {std::move(text), latency, id()};
    }
    if (!retryable(res.status))
      throw Error(ErrorCode::InvalidArgument,
                  "chat backend rejected request (HTTP " + std::to_string(res.status) +
                      "): " + res.body.substr(0, 300));

    last_error = res.transport_failed() ? res.error : "HTTP " + std::to_string(res.status);
    log::warn("chat request attempt " + std::to_string(attempt) + "/" +
              std::to_string(config_.max_attempts) + " failed: " + last_error);
    if (attempt < config_.max_attempts) {
      sleep_(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::TransportExhausted, "chat backend unreachable after " +
                                                 std::to_string(config_.max_attempts) +
                                                 " attempts: " + last_error);
}

}  // namespace urbanmas::llm
