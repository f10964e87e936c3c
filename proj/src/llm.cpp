#include "vista/llm.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vista/text.hpp"

namespace vista::llm {

namespace {

void append_field(std::string& out, std::string_view field) {
    out += std::to_string(field.size());
    out += ':';
    out += field;
    out += ';';
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "?";
}

void CompletionParams::check() const {
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw ConfigError("temperature must lie in [0, 2], got " + text::format_number(temperature));
    if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
    if (model.empty()) throw ConfigError("model id must be non-empty");
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string file_digest(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

std::string request_fingerprint(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
    std::string canon;
    append_field(canon, "vista-request-v1");
    append_field(canon, params.model);
    char temp[64];
    std::snprintf(temp, sizeof temp, "%.17g", params.temperature);
    append_field(canon, temp);
    append_field(canon, std::to_string(messages.size()));
    for (const auto& m : messages) {
        append_field(canon, to_string(m.role));
        append_field(canon, m.content);
        append_field(canon, std::to_string(m.attachments.size()));
        for (const auto& a : m.attachments) append_field(canon, file_digest(a));
    }
    return sha256_hex(canon);
}

std::string_view to_string(CassetteMode m) noexcept {
    switch (m) {
        case CassetteMode::Record: return "record";
        case CassetteMode::Replay: return "replay";
        case CassetteMode::Passthrough: return "passthrough";
    }
    return "?";
}

std::optional<CassetteMode> parse_cassette_mode(std::string_view s) noexcept {
    for (auto m : {CassetteMode::Record, CassetteMode::Replay, CassetteMode::Passthrough})
        if (to_string(m) == s) return m;
    return std::nullopt;
}

Cassette Cassette::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cassette " + path.string());
    Cassette c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CassetteEntry e;
            e.response = j.at("response").get<std::string>();
            e.input_tokens = j.at("input_tokens").get<std::int64_t>();
            e.output_tokens = j.at("output_tokens").get<std::int64_t>();
            c.insert(j.at("fingerprint").get<std::string>(), std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad cassette entry: " + e.what());
        }
    }
    return c;
}

const CassetteEntry* Cassette::find(const std::string& fingerprint) const {
    auto it = entries_.find(fingerprint);
    return it == entries_.end() ? nullptr : &it->second;
}

void Cassette::insert(const std::string& fingerprint, CassetteEntry entry) {
    entries_[fingerprint] = std::move(entry);
}

std::string Cassette::encode_line(const std::string& fingerprint, const CassetteEntry& e) {
    nlohmann::ordered_json j;
    j["fingerprint"] = fingerprint;
    j["response"] = e.response;
    j["input_tokens"] = e.input_tokens;
    j["output_tokens"] = e.output_tokens;
    return j.dump();
}

CassetteClient::CassetteClient(CassetteMode mode, Cassette cassette, ChatClient* inner,
                               std::optional<std::filesystem::path> file)
    : mode_(mode), cassette_(std::move(cassette)), inner_(inner), file_(std::move(file)) {
    if (mode_ != CassetteMode::Replay && inner_ == nullptr)
        throw ConfigError(std::string(to_string(mode_)) + " mode needs a live client");
}

Completion CassetteClient::complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
    if (messages.empty()) throw Error("completion request needs at least one message");
    ++calls_;
    switch (mode_) {
        case CassetteMode::Passthrough: return inner_->complete(messages, params);
        case CassetteMode::Replay: {
            const auto fp = request_fingerprint(messages, params);
            const auto* e = cassette_.find(fp);
            if (!e) throw CassetteMiss(fp);
            return {e->response, {e->input_tokens, e->output_tokens, 0.0}};
        }
        case CassetteMode::Record: {
            const auto fp = request_fingerprint(messages, params);
            auto result = inner_->complete(messages, params);
            CassetteEntry entry{result.text, result.usage.input_tokens, result.usage.output_tokens};
            std::lock_guard lock(write_mutex_);
            if (file_) {
                std::ofstream out(*file_, std::ios::app);
                if (!out) throw Error("cannot append to cassette " + file_->string());
                out << Cassette::encode_line(fp, entry) << '\n';
            }
            cassette_.insert(fp, std::move(entry));
            return result;
        }
    }
    throw Error("unreachable cassette mode");
}

}  // namespace vista::llm
