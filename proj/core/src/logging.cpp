#include "urbanmas/logging.hpp"

#include <algorithm>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace urbanmas::log {

struct Capture::State {
  mutable std::mutex mu;
  std::vector<Entry> entries;
};

namespace {

std::mutex& captures_mutex() {
  static std::mutex mu;
  return mu;
}

std::vector<Capture::State*>& captures() {
  static std::vector<Capture::State*> v;
  return v;
}

std::shared_ptr<spdlog::logger> logger() {
  static auto lg = [] {
    auto l = spdlog::stderr_color_mt("urbanmas");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return lg;
}

spdlog::level::level_enum to_spd(Level level) {
  switch (level) {
    case Level::Debug: return spdlog::level::debug;
    case Level::Info: return spdlog::level::info;
    case Level::Warn: return spdlog::level::warn;
    case Level::Error: return spdlog::level::err;
  }
  return spdlog::level::info;
}

}  // namespace

void write(Level level, std::string_view message) {
  {
    std::lock_guard lock(captures_mutex());
    for (auto* s : captures()) {
      std::lock_guard inner(s->mu);
      s->entries.push_back({level, std::string(message)});
    }
  }
  logger()->log(to_spd(level), "{}", message);
}

void set_min_level(Level level) { logger()->set_level(to_spd(level)); }

Capture::Capture() : state_(new State) {
  std::lock_guard lock(captures_mutex());
  captures().push_back(state_);
}

Capture::~Capture() {
  {
    std::lock_guard lock(captures_mutex());
    auto& v = captures();
    v.erase(std::remove(v.begin(), v.end(), state_), v.end());
  }
  delete state_;
}

std::vector<Entry> Capture::entries() const {
  std::lock_guard lock(state_->mu);
  return state_->entries;
}

std::size_t Capture::count(Level level) const {
  std::lock_guard lock(state_->mu);
  return static_cast<std::size_t>(std::count_if(state_->entries.begin(), state_->entries.end(),
                                                [&](const Entry& e) { return e.level == level; }));
}

bool Capture::contains(std::string_view needle) const {
  std::lock_guard lock(state_->mu);
  return std::any_of(state_->entries.begin(), state_->entries.end(),
                     [&](const Entry& e) { return e.message.find(needle) != std::string::npos; });
}

}  // namespace urbanmas::log
