#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "scripted_model.hpp"

namespace httplib {
class Server;
}

namespace vista::testing {

// OpenAI-compatible /v1/chat/completions server on 127.0.0.1 backed by a
// ScriptedModel. Used to exercise the HTTP client and record cassettes.
class FakeEndpoint {
public:
    FakeEndpoint();
    ~FakeEndpoint();
    FakeEndpoint(const FakeEndpoint&) = delete;
    FakeEndpoint& operator=(const FakeEndpoint&) = delete;

    std::string base_url() const;  // http://127.0.0.1:PORT/v1

    // The next `n` requests get `status` with an optional Retry-After header.
    void fail_next(int n, int status, std::string retry_after = {});
    // Every request sleeps this long before answering.
    void set_delay_ms(int ms) { delay_ms_ = ms; }

    std::size_t requests() const noexcept { return requests_.load(); }
    std::string last_body() const;
    std::string last_authorization() const;

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    ScriptedModel model_;
    std::atomic<int> fail_remaining_{0};
    int fail_status_ = 500;
    std::string retry_after_;
    std::atomic<int> delay_ms_{0};
    std::atomic<std::size_t> requests_{0};
    mutable std::mutex mutex_;
    std::string last_body_;
    std::string last_auth_;
};

}  // namespace vista::testing
