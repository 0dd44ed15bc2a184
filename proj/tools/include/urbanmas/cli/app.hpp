#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "urbanmas/http.hpp"
#include "urbanmas/llm/backend.hpp"
#include "urbanmas/llm/rate_limiter.hpp"

namespace urbanmas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Injection points for the command runner. Unset members fall back to the
/// real implementations.
struct Services {
  std::shared_ptr<HttpTransport> transport;
  NowFn now;
  SleepFn sleep;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  /// Set by the runner: the counting wrapper around the chat backend used by
  /// the last command, for call accounting.
  std::shared_ptr<llm::CountingBackend> backend;
};

/// Runs one invocation; `args` excludes the program name. Returns the
/// process exit code: 0 on success, 1 on any run failure, 2 on usage or
/// configuration errors.
int run_cli(const std::vector<std::string>& args, Services& services);

}  // namespace urbanmas::cli
