#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "urbanmas/llm/backend.hpp"

namespace urbanmas::llm {

/// Append-only store of fingerprint -> response pairs backed by a JSON-lines
/// file. Each line holds {"fingerprint", "agent", "request", "response"}.
/// Later lines win over earlier ones with the same fingerprint.
class Cassette {
 public:
  /// Loads `path` if it exists; a missing file yields an empty cassette that
  /// will be created on the first record().
  explicit Cassette(std::filesystem::path path);

  /// Appends one line unless the identical exchange is already stored.
  /// Re-recording an existing fingerprint with a new response overwrites it
  /// (last write wins) and logs a warning.
  void record(const ChatRequest& req, const ChatResponse& resp);
  std::optional<ChatResponse> lookup(const ChatRequest& req) const;
  /// Throws Error(ReplayMiss) when the fingerprint is absent.
  ChatResponse replay(const ChatRequest& req) const;

  std::size_t size() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, ChatResponse> entries_;
};

class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const Cassette> cassette)
      : cassette_(std::move(cassette)) {}
  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "replay"; }

 private:
  std::shared_ptr<const Cassette> cassette_;
};

/// Forwards to `inner` and records every exchange.
class RecordingBackend final : public ChatBackend {
 public:
  RecordingBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<Cassette> cassette)
      : inner_(std::move(inner)), cassette_(std::move(cassette)) {}
  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "record(" + inner_->id() + ")"; }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<Cassette> cassette_;
};

}  // namespace urbanmas::llm
