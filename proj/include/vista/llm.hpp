#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vista/core.hpp"

// Provider-agnostic chat completion plus record/replay cassettes.
namespace vista::llm {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::vector<std::filesystem::path> attachments;  // image files

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionParams {
    std::string model = "default";
    double temperature = 0.0;
    int max_output_tokens = 2048;
    std::optional<std::int64_t> seed = 0;

    // Throws ConfigError when temperature is outside [0, 2] or the token cap is < 1.
    void check() const;
};

struct Completion {
    std::string text;
    TokenUsage usage;
};

class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& what,
                  std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
        : Error("provider error (HTTP " + std::to_string(status) + "): " + what),
          status_(status),
          retry_after_(retry_after) {}
    int status() const noexcept { return status_; }
    std::optional<std::chrono::milliseconds> retry_after() const noexcept { return retry_after_; }

private:
    int status_;
    std::optional<std::chrono::milliseconds> retry_after_;
};

class Timeout : public Error {
public:
    using Error::Error;
};

class CassetteMiss : public Error {
public:
    explicit CassetteMiss(std::string fingerprint)
        : Error("cassette has no entry for request " + fingerprint), fingerprint_(std::move(fingerprint)) {}
    const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    // Throws ProviderError, Timeout or CassetteMiss.
    virtual Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) = 0;
};

// SHA-256 (hex) over model, temperature and the ordered messages, with each
// attachment contributing the digest of its bytes rather than its path.
std::string request_fingerprint(const std::vector<ChatMessage>& messages, const CompletionParams& params);
std::string file_digest(const std::filesystem::path& p);
std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);

// ---------------------------------------------------------------------------
// Cassettes
// ---------------------------------------------------------------------------

enum class CassetteMode { Record, Replay, Passthrough };
std::string_view to_string(CassetteMode m) noexcept;
std::optional<CassetteMode> parse_cassette_mode(std::string_view s) noexcept;

struct CassetteEntry {
    std::string response;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

// JSON-lines file, one {fingerprint, response, input_tokens, output_tokens}
// object per line. Later lines override earlier ones.
class Cassette {
public:
    Cassette() = default;
    static Cassette load(const std::filesystem::path& path);

    const CassetteEntry* find(const std::string& fingerprint) const;
    void insert(const std::string& fingerprint, CassetteEntry entry);
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<std::string, CassetteEntry>& entries() const noexcept { return entries_; }

    static std::string encode_line(const std::string& fingerprint, const CassetteEntry& e);

private:
    std::map<std::string, CassetteEntry> entries_;
};

// Record: forwards to `inner`, stores the answer and appends it to `file`.
// Replay: answers only from the cassette (lock-free reads).
// Passthrough: forwards to `inner` untouched.
class CassetteClient : public ChatClient {
public:
    CassetteClient(CassetteMode mode, Cassette cassette, ChatClient* inner = nullptr,
                   std::optional<std::filesystem::path> file = std::nullopt);

    Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

    CassetteMode mode() const noexcept { return mode_; }
    std::size_t calls() const noexcept { return calls_.load(); }
    const Cassette& cassette() const noexcept { return cassette_; }

private:
    CassetteMode mode_;
    Cassette cassette_;
    ChatClient* inner_;
    std::optional<std::filesystem::path> file_;
    std::mutex write_mutex_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// HTTP endpoint (OpenAI-compatible /chat/completions)
// ---------------------------------------------------------------------------

struct EndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 120.0;
};

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(EndpointConfig config);
    Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) override;

    // Request body sent to the endpoint; exposed for tests.
    static std::string build_request_body(const std::vector<ChatMessage>& messages, const CompletionParams& params);

private:
    EndpointConfig config_;
};

}  // namespace vista::llm
