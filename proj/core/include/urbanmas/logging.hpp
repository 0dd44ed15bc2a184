#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanmas::log {

enum class Level { Debug, Info, Warn, Error };

void write(Level level, std::string_view message);
inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

void set_min_level(Level level);

struct Entry {
  Level level;
  std::string message;
};

/// Collects every message emitted on any thread while alive. Captures nest;
/// each sees all messages written during its lifetime.
class Capture {
 public:
  Capture();
  ~Capture();
  Capture(const Capture&) = delete;
  Capture& operator=(const Capture&) = delete;

  std::vector<Entry> entries() const;
  std::size_t count(Level level) const;
  bool contains(std::string_view needle) const;

  struct State;

 private:
  State* state_;
};

}  // namespace urbanmas::log
