#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "fake_endpoint.hpp"
#include "json.hpp"
#include "scripted_model.hpp"
#include "vista/llm.hpp"
#include "vista/retry.hpp"

using namespace vista;
using namespace vista::llm;
using vista::testing::FakeEndpoint;
using vista::testing::ScriptedModel;
using vista::testing::TempDir;

namespace {

std::vector<ChatMessage> judge_messages(const std::string& extra = "") {
    return {{Role::System, "You are an evaluator of generated questions.", {}},
            {Role::User, "Problem ID: p1\nRate these." + extra, {}}};
}

class CountingClient : public ChatClient {
public:
    Completion complete(const std::vector<ChatMessage>& m, const CompletionParams& p) override {
        ++calls;
        return {"reply to " + m.back().content + " at " + std::to_string(p.temperature), {10, 2, 0.5}};
    }
    int calls = 0;
};

class FlakyClient : public ChatClient {
public:
    explicit FlakyClient(int failures, std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
        : failures_(failures), retry_after_(retry_after) {}
    Completion complete(const std::vector<ChatMessage>&, const CompletionParams&) override {
        ++calls;
        if (failures_-- > 0) throw ProviderError(503, "busy", retry_after_);
        return {"ok", {}};
    }
    int calls = 0;

private:
    int failures_;
    std::optional<std::chrono::milliseconds> retry_after_;
};

}  // namespace

TEST_SUITE("llm") {
    TEST_CASE("completion params are checked") {
        CompletionParams p;
        CHECK_NOTHROW(p.check());
        p.temperature = 2.5;
        CHECK_THROWS_AS(p.check(), ConfigError);
        p.temperature = 0.0;
        p.max_output_tokens = 0;
        CHECK_THROWS_AS(p.check(), ConfigError);
        p.max_output_tokens = 10;
        p.model.clear();
        CHECK_THROWS_AS(p.check(), ConfigError);
    }

    TEST_CASE("hashing helpers") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(base64_encode("") == "");
        CHECK(base64_encode("f") == "Zg==");
        CHECK(base64_encode("fo") == "Zm8=");
        CHECK(base64_encode("foobar") == "Zm9vYmFy");
    }

    TEST_CASE("fingerprints depend on content, model and temperature") {
        CompletionParams p;
        const auto base = request_fingerprint(judge_messages(), p);
        CHECK(base.size() == 64);
        CHECK(request_fingerprint(judge_messages(), p) == base);
        CHECK(request_fingerprint(judge_messages("!"), p) != base);
        auto q = p;
        q.model = "other";
        CHECK(request_fingerprint(judge_messages(), q) != base);
        q = p;
        q.temperature = 0.7;
        CHECK(request_fingerprint(judge_messages(), q) != base);
        auto swapped = judge_messages();
        swapped[0].role = Role::User;
        CHECK(request_fingerprint(swapped, p) != base);
    }

    TEST_CASE("attachments are fingerprinted by content, not path") {
        TempDir dir;
        testing::write_png(dir.path() / "a.png", 8, 8, 0);
        testing::write_png(dir.path() / "b.png", 8, 8, 0);
        testing::write_png(dir.path() / "c.png", 8, 8, 1);
        auto msgs = judge_messages();
        msgs[1].attachments = {dir.path() / "a.png"};
        const auto fa = request_fingerprint(msgs, {});
        msgs[1].attachments = {dir.path() / "b.png"};
        CHECK(request_fingerprint(msgs, {}) == fa);
        msgs[1].attachments = {dir.path() / "c.png"};
        CHECK(request_fingerprint(msgs, {}) != fa);
        CHECK(file_digest(dir.path() / "a.png") == file_digest(dir.path() / "b.png"));
    }

    TEST_CASE("cassette record then replay") {
        TempDir dir;
        const auto file = dir.path() / "c.jsonl";
        CountingClient live;
        {
            CassetteClient rec(CassetteMode::Record, Cassette{}, &live, file);
            const auto c = rec.complete(judge_messages(), {});
            CHECK(c.usage.wall_time == doctest::Approx(0.5));
            rec.complete(judge_messages("x"), {});
            CHECK(rec.cassette().size() == 2);
        }
        CHECK(live.calls == 2);
        const auto loaded = Cassette::load(file);
        CHECK(loaded.size() == 2);
        CassetteClient replay(CassetteMode::Replay, loaded);
        const auto c = replay.complete(judge_messages(), {});
        CHECK(c.text == "reply to Problem ID: p1\nRate these. at 0.000000");
        CHECK(c.usage.input_tokens == 10);
        CHECK(c.usage.output_tokens == 2);
        CHECK(c.usage.wall_time == 0.0);
        CHECK(live.calls == 2);
        try {
            replay.complete(judge_messages("never recorded"), {});
            FAIL("expected CassetteMiss");
        } catch (const CassetteMiss& e) {
            CHECK(e.fingerprint() == request_fingerprint(judge_messages("never recorded"), {}));
        }
        CHECK_THROWS_AS(replay.complete({}, {}), Error);
    }

    TEST_CASE("passthrough forwards untouched") {
        CountingClient live;
        CassetteClient pass(CassetteMode::Passthrough, Cassette{}, &live);
        pass.complete(judge_messages(), {});
        pass.complete(judge_messages(), {});
        CHECK(live.calls == 2);
        CHECK(pass.cassette().size() == 0);
        CHECK_THROWS_AS(CassetteClient(CassetteMode::Record, Cassette{}), ConfigError);
    }

    TEST_CASE("cassette lines: later entries win, bad lines name their position") {
        TempDir dir;
        const auto file = dir.path() / "c.jsonl";
        testing::write_file(file, Cassette::encode_line("ab", {"first", 1, 1}) + "\n\n" +
                                      Cassette::encode_line("ab", {"second", 2, 2}) + "\n");
        const auto c = Cassette::load(file);
        REQUIRE(c.size() == 1);
        CHECK(c.find("ab")->response == "second");
        testing::write_file(file, Cassette::encode_line("ab", {"first", 1, 1}) + "\n{\"fingerprint\": 3}\n");
        try {
            Cassette::load(file);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
        CHECK_THROWS_AS(Cassette::load(dir.path() / "missing.jsonl"), ConfigError);
    }

    TEST_CASE("concurrent recording keeps every line intact") {
        TempDir dir;
        const auto file = dir.path() / "c.jsonl";
        CountingClient live;
        CassetteClient rec(CassetteMode::Record, Cassette{}, &live, file);
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t)
            threads.emplace_back([&, t] {
                for (int i = 0; i < 25; ++i) rec.complete(judge_messages(std::to_string(t * 100 + i)), {});
            });
        for (auto& th : threads) th.join();
        CHECK(Cassette::load(file).size() == 100);
    }

    TEST_CASE("retry backoff and give-up") {
        std::vector<std::chrono::milliseconds> slept;
        auto sleeper = [&](std::chrono::milliseconds d) { slept.push_back(d); };
        FlakyClient flaky(2);
        RetryPolicy policy{3, std::chrono::milliseconds(100)};
        const auto c = with_retry([&] { return flaky.complete({}, {}); }, policy, sleeper);
        CHECK(c.text == "ok");
        REQUIRE(slept.size() == 2);
        CHECK(slept[0].count() >= 100);
        CHECK(slept[0].count() <= 150);
        CHECK(slept[1].count() >= 200);
        CHECK(slept[1].count() <= 300);

        FlakyClient once(1);
        with_retry([&] { return once.complete({}, {}); }, policy, sleeper);
        CHECK(once.calls == 2);
        FlakyClient fine(0);
        with_retry([&] { return fine.complete({}, {}); }, RetryPolicy{1, {}}, sleeper);
        CHECK(fine.calls == 1);

        FlakyClient hopeless(10);
        try {
            with_retry([&] { return hopeless.complete({}, {}); }, policy, sleeper);
            FAIL("expected ExhaustedRetries");
        } catch (const ExhaustedRetries& e) {
            CHECK(e.attempts() == 3);
            CHECK(hopeless.calls == 3);
            CHECK_THROWS_AS(std::rethrow_exception(e.last_error()), ProviderError);
        }

        int calls = 0;
        CHECK_THROWS_AS(with_retry(
                            [&]() -> int {
                                ++calls;
                                throw CassetteMiss("x");
                            },
                            policy, sleeper),
                        CassetteMiss);
        CHECK(calls == 1);
        CHECK_THROWS_AS(with_retry([] { return 1; }, RetryPolicy{0, {}}, sleeper), ConfigError);
    }

    TEST_CASE("retry honours a provider's retry-after") {
        std::vector<std::chrono::milliseconds> slept;
        FlakyClient flaky(1, std::chrono::milliseconds(5000));
        with_retry([&] { return flaky.complete({}, {}); }, RetryPolicy{3, std::chrono::milliseconds(10)},
                   [&](std::chrono::milliseconds d) { slept.push_back(d); });
        REQUIRE(slept.size() == 1);
        CHECK(slept[0].count() == 5000);
    }

    TEST_CASE("request body layout") {
        TempDir dir;
        testing::write_png(dir.path() / "f.png", 4, 4);
        auto msgs = judge_messages();
        msgs[1].attachments = {dir.path() / "f.png"};
        CompletionParams p;
        p.model = "m";
        const auto body = nlohmann::json::parse(HttpChatClient::build_request_body(msgs, p));
        CHECK(body["model"] == "m");
        CHECK(body["messages"][0]["role"] == "system");
        CHECK(body["messages"][0]["content"].is_string());
        const auto& parts = body["messages"][1]["content"];
        REQUIRE(parts.is_array());
        CHECK(parts[0]["type"] == "text");
        CHECK(parts[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);
    }

    TEST_CASE("http client against a local endpoint") {
        FakeEndpoint server;
        ::setenv("VISTA_TEST_KEY", "sk-test", 1);
        HttpChatClient client({server.base_url(), "VISTA_TEST_KEY", 5.0});
        const auto msgs = judge_messages();
        const auto c = client.complete(msgs, {});
        ScriptedModel reference;
        const auto expected = reference.complete(msgs, {});
        CHECK(c.text == expected.text);
        CHECK(c.usage.input_tokens == expected.usage.input_tokens);
        CHECK(c.usage.output_tokens == expected.usage.output_tokens);
        CHECK(c.usage.wall_time > 0.0);
        CHECK(server.last_authorization() == "Bearer sk-test");

        ::unsetenv("VISTA_TEST_KEY");
        client.complete(msgs, {});
        CHECK(server.last_authorization().empty());
    }

    TEST_CASE("usage reported by the endpoint accumulates") {
        httplib::Server server;
        server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices": [{"message": {"role": "assistant", "content": "done"}}],
                                "usage": {"prompt_tokens": 3400, "completion_tokens": 600}})",
                            "application/json");
        });
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread th([&] { server.listen_after_bind(); });
        server.wait_until_ready();
        HttpChatClient client({"http://127.0.0.1:" + std::to_string(port) + "/v1", "VISTA_UNSET_KEY", 5.0});
        TokenUsage total;
        const auto first = client.complete(judge_messages(), {});
        CHECK(first.usage.input_tokens == 3400);
        CHECK(first.usage.output_tokens == 600);
        total += first.usage;
        total += client.complete(judge_messages(), {}).usage;
        CHECK(total.input_tokens == 6800);
        CHECK(total.output_tokens == 1200);
        server.stop();
        th.join();
    }

    TEST_CASE("http errors surface status and retry-after") {
        FakeEndpoint server;
        HttpChatClient client({server.base_url(), "VISTA_UNSET_KEY", 5.0});
        server.fail_next(1, 429, "2");
        try {
            client.complete(judge_messages(), {});
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.status() == 429);
            REQUIRE(e.retry_after());
            CHECK(e.retry_after()->count() == 2000);
        }

        server.fail_next(2, 500);
        std::vector<std::chrono::milliseconds> slept;
        const auto c = with_retry([&] { return client.complete(judge_messages(), {}); },
                                  RetryPolicy{3, std::chrono::milliseconds(1)},
                                  [&](std::chrono::milliseconds d) { slept.push_back(d); });
        CHECK(slept.size() == 2);
        CHECK(c.text.find("Score:") != std::string::npos);
    }

    TEST_CASE("http timeout") {
        FakeEndpoint server;
        server.set_delay_ms(1500);
        HttpChatClient client({server.base_url(), "VISTA_UNSET_KEY", 0.3});
        CHECK_THROWS_AS(client.complete(judge_messages(), {}), Timeout);
    }

    TEST_CASE("endpoint config is checked") {
        CHECK_THROWS_AS(HttpChatClient({"no-scheme", "X", 1.0}), ConfigError);
        CHECK_THROWS_AS(HttpChatClient({"http://x", "X", 0.0}), ConfigError);
    }
}
