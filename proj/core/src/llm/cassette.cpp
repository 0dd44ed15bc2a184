#include "urbanmas/llm/cassette.hpp"

#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "urbanmas/dataset.hpp"
#include "urbanmas/error.hpp"
#include "urbanmas/logging.hpp"

namespace urbanmas::llm {

namespace fs = std::filesystem;
using nlohmann::json;

Cassette::Cassette(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  for (const auto& line : read_jsonl(path_)) {
    const auto fp = line.at("fingerprint").get<std::string>();
    const auto& r = line.at("response");
    ChatResponse resp{r.at("text").get<std::string>(), 0.0, r.value("backend_id", "replay")};
    if (!entries_.insert_or_assign(fp, std::move(resp)).second)
      log::warn("cassette " + path_.string() + ": duplicate fingerprint " + fp +
                ", keeping the later entry");
  }
}

void Cassette::record(const ChatRequest& req, const ChatResponse& resp) {
  const auto fp = fingerprint(req);
  // Latency is deliberately not stored: cassettes must be reproducible.
  json line{{"fingerprint", fp},
            {"agent", req.agent},
            {"request",
             {{"system", req.system_prompt},
              {"user", req.user_prompt},
              {"image_refs", req.image_refs},
              {"response_format", to_string(req.response_format)},
              {"variant_seed", req.variant_seed}}},
            {"response", {{"text", resp.text}, {"backend_id", resp.backend_id}}}};

  std::unique_lock lock(mu_);
  if (auto it = entries_.find(fp); it != entries_.end() && it->second.text == resp.text &&
                                   it->second.backend_id == resp.backend_id)
    return;  // identical exchange already stored
  if (entries_.count(fp) != 0)
    log::warn("cassette " + path_.string() + ": re-recording fingerprint " + fp +
              " (last write wins)");
  entries_.insert_or_assign(fp, ChatResponse{resp.text, 0.0, resp.backend_id});

  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot append to cassette '" + path_.string() + "'");
  out << line.dump() << '\n';
}

std::optional<ChatResponse> Cassette::lookup(const ChatRequest& req) const {
  const auto fp = fingerprint(req);
  std::shared_lock lock(mu_);
  auto it = entries_.find(fp);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

ChatResponse Cassette::replay(const ChatRequest& req) const {
  if (auto r = lookup(req)) return *r;
  throw Error(ErrorCode::ReplayMiss, "cassette " + path_.string() + " has no entry for " +
                                         (req.agent.empty() ? "request" : req.agent) + " " +
                                         fingerprint(req));
}

std::size_t Cassette::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  validate_request(req);
  return cassette_->replay(req);
}

ChatResponse RecordingBackend::complete(const ChatRequest& req) {
  auto resp = inner_->complete(req);
  cassette_->record(req, resp);
  return resp;
}

}  // namespace urbanmas::llm
