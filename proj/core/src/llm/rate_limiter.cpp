#include "urbanmas/llm/rate_limiter.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "urbanmas/error.hpp"

namespace urbanmas {

NowFn system_now() {
  return [] { return Clock::now(); };
}

SleepFn system_sleep() {
  return [](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); };
}

TokenBucket::TokenBucket(double requests_per_minute, double burst, NowFn now, SleepFn sleep)
    : rate_per_ns_(requests_per_minute / 60e9),
      capacity_(burst),
      tokens_(burst),
      now_(std::move(now)),
      sleep_(std::move(sleep)) {
  if (!(requests_per_minute > 0.0) || !(burst >= 1.0))
    throw Error(ErrorCode::InvalidArgument, "token bucket needs rpm > 0 and burst >= 1");
  last_ = now_();
}

void TokenBucket::acquire() {
  // Holding the lock while sleeping serializes waiters in arrival order.
  std::lock_guard lock(mu_);
  for (;;) {
    const auto t = now_();
    const auto elapsed = std::chrono::duration<double, std::nano>(t - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ns_);
    last_ = t;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait_ns = std::ceil((1.0 - tokens_) / rate_per_ns_);
    sleep_(std::chrono::nanoseconds(static_cast<std::int64_t>(wait_ns)));
  }
}

IntervalLimiter::IntervalLimiter(std::chrono::milliseconds spacing, NowFn now, SleepFn sleep)
    : spacing_(spacing), now_(std::move(now)), sleep_(std::move(sleep)) {}

void IntervalLimiter::acquire() {
  std::lock_guard lock(mu_);
  auto t = now_();
  if (!first_ && t < next_) {
    sleep_(next_ - t);
    t = now_();
  }
  first_ = false;
  next_ = std::max(t, next_) + spacing_;
}

InFlightLimiter::InFlightLimiter(std::size_t max_in_flight) : max_(max_in_flight) {
  if (max_ == 0) throw Error(ErrorCode::InvalidArgument, "max in-flight must be >= 1");
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return current_ < max_; });
  ++current_;
  peak_ = std::max(peak_, current_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --current_;
  }
  cv_.notify_one();
}

std::size_t InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

}  // namespace urbanmas
