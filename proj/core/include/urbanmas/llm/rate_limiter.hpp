#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>

namespace urbanmas {

using Clock = std::chrono::steady_clock;
using NowFn = std::function<Clock::time_point()>;
using SleepFn = std::function<void(std::chrono::nanoseconds)>;

NowFn system_now();
SleepFn system_sleep();

/// Token bucket. With the default burst of 1 the bucket degenerates into
/// fixed spacing of 60 s / requests_per_minute, so no sliding 60 s window
/// ever admits more than `requests_per_minute` acquisitions.
class TokenBucket {
 public:
  TokenBucket(double requests_per_minute, double burst = 1.0, NowFn now = system_now(),
              SleepFn sleep = system_sleep());

  /// Blocks (via the sleep function) until a token is available.
  void acquire();

 private:
  double rate_per_ns_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  NowFn now_;
  SleepFn sleep_;
  std::mutex mu_;
};

/// Minimum spacing between consecutive calls, shared across threads.
class IntervalLimiter {
 public:
  explicit IntervalLimiter(std::chrono::milliseconds spacing, NowFn now = system_now(),
                           SleepFn sleep = system_sleep());
  void acquire();

 private:
  std::chrono::milliseconds spacing_;
  bool first_ = true;
  Clock::time_point next_;
  NowFn now_;
  SleepFn sleep_;
  std::mutex mu_;
};

/// Counting semaphore bounding concurrent in-flight work.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight);

  void acquire();
  void release();
  std::size_t peak() const;

  class Guard {
   public:
    explicit Guard(InFlightLimiter& l) : l_(l) { l_.acquire(); }
    ~Guard() { l_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter& l_;
  };

 private:
  std::size_t max_;
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace urbanmas
