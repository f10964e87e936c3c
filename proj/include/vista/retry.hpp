#pragma once

#include <chrono>
#include <exception>
#include <functional>
#include <random>
#include <thread>

#include "vista/llm.hpp"

namespace vista::llm {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
};

class ExhaustedRetries : public Error {
public:
    ExhaustedRetries(int attempts, std::exception_ptr last, const std::string& last_what)
        : Error("gave up after " + std::to_string(attempts) + " attempt(s): " + last_what),
          attempts_(attempts),
          last_(std::move(last)) {}
    int attempts() const noexcept { return attempts_; }
    std::exception_ptr last_error() const noexcept { return last_; }

private:
    int attempts_;
    std::exception_ptr last_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

// Calls `call` until it succeeds. ProviderError and Timeout are retried with
// exponential backoff (base * 2^(n-1), plus up to 50% jitter, never shorter
// than a provider's retry-after); anything else propagates immediately.
template <class Call>
auto with_retry(Call&& call, const RetryPolicy& policy, const Sleeper& sleep = real_sleep)
    -> decltype(call()) {
    if (policy.max_attempts < 1) throw ConfigError("retry policy needs max_attempts >= 1");
    thread_local std::minstd_rand jitter_rng{std::random_device{}()};
    for (int attempt = 1;; ++attempt) {
        std::chrono::milliseconds floor{0};
        try {
            return call();
        } catch (const ProviderError& e) {
            if (attempt >= policy.max_attempts) throw ExhaustedRetries(attempt, std::current_exception(), e.what());
            if (e.retry_after()) floor = *e.retry_after();
        } catch (const Timeout& e) {
            if (attempt >= policy.max_attempts) throw ExhaustedRetries(attempt, std::current_exception(), e.what());
        }
        const auto backoff = policy.base_delay * (1LL << std::min(attempt - 1, 20));
        std::uniform_real_distribution<double> jitter(0.0, 0.5);
        auto delay = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) * (1.0 + jitter(jitter_rng))));
        sleep(std::max(delay, floor));
    }
}

}  // namespace vista::llm
