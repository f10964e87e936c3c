#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vista/llm.hpp"

namespace vista::llm {

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // no trailing slash
};

ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

std::string mime_for(const std::string& bytes) {
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
        static_cast<unsigned char>(bytes[1]) == 0xD8)
        return "image/jpeg";
    if (bytes.rfind("\x89PNG", 0) == 0) return "image/png";
    return "image/svg+xml";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read attachment " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
    split_url(config_.base_url);
    if (!(config_.timeout_s > 0)) throw ConfigError("endpoint timeout must be positive");
}

std::string HttpChatClient::build_request_body(const std::vector<ChatMessage>& messages,
                                               const CompletionParams& params) {
    nlohmann::ordered_json body;
    body["model"] = params.model;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_output_tokens;
    if (params.seed) body["seed"] = *params.seed;
    auto& msgs = body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        nlohmann::ordered_json jm;
        jm["role"] = to_string(m.role);
        if (m.attachments.empty()) {
            jm["content"] = m.content;
        } else {
            auto parts = nlohmann::ordered_json::array();
            if (!m.content.empty()) parts.push_back({{"type", "text"}, {"text", m.content}});
            for (const auto& a : m.attachments) {
                const auto bytes = slurp(a);
                parts.push_back({{"type", "image_url"},
                                 {"image_url", {{"url", "data:" + mime_for(bytes) + ";base64," + base64_encode(bytes)}}}});
            }
            jm["content"] = std::move(parts);
        }
        msgs.push_back(std::move(jm));
    }
    return body.dump();
}

Completion HttpChatClient::complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
    params.check();
    const auto url = split_url(config_.base_url);
    httplib::Client client(url.origin);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(url.path + "/chat/completions", headers, build_request_body(messages, params),
                           "application/json");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
            throw Timeout("endpoint did not answer within " + std::to_string(config_.timeout_s) + " s");
        throw ProviderError(0, httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        std::optional<std::chrono::milliseconds> retry_after;
        if (res->has_header("Retry-After")) {
            try {
                retry_after = std::chrono::milliseconds(
                    static_cast<std::int64_t>(std::stod(res->get_header_value("Retry-After")) * 1000.0));
            } catch (const std::exception&) {
            }
        }
        throw ProviderError(res->status, res->body.substr(0, 512), retry_after);
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        Completion out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto u = j.find("usage"); u != j.end()) {
            out.usage.input_tokens = u->value("prompt_tokens", std::int64_t{0});
            out.usage.output_tokens = u->value("completion_tokens", std::int64_t{0});
        }
        out.usage.wall_time = elapsed;
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(res->status, std::string("unexpected response body: ") + e.what());
    }
}

}  // namespace vista::llm
