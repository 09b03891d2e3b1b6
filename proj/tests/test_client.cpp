#include <doctest.h>

#include <filesystem>
#include <thread>

#include "sce/client.hpp"
#include "support/mock_server.hpp"

using namespace sce;

namespace {

BackendConfig fast_config(const std::string& base_url) {
    BackendConfig cfg;
    cfg.base_url = base_url;
    cfg.model_name = "mock-model";
    cfg.request_timeout_s = 5.0;
    cfg.max_retries = 3;
    cfg.max_in_flight = 4;
    cfg.retry_backoff_ms = 1;
    return cfg;
}

Conversation one_turn(const std::string& text) {
    Conversation conv;
    conv.push_user(text);
    return conv;
}

}  // namespace

TEST_CASE("complete returns the scripted assistant text") {
    mock::Server server;
    LlmClient client(fast_config(server.base_url()));
    CompletionResult result = client.complete(one_turn("hello"), GenConfig{});
    CHECK(result.ok());
    CHECK(result.text == "ANSWER: Yes");
    CHECK(result.finish_reason == FinishReason::stop);
    CHECK(result.attempts == 1);
    CHECK(result.latency_s >= 0.0);
}

TEST_CASE("complete retries 5xx responses and succeeds") {
    mock::Server server;
    server.fail_next(2, 500);
    LlmClient client(fast_config(server.base_url()));
    CompletionResult result = client.complete(one_turn("retry me"), GenConfig{});
    CHECK(result.ok());
    CHECK(result.attempts == 3);
}

TEST_CASE("retried requests are byte-identical") {
    mock::Server server;
    server.fail_next(2, 503);
    LlmClient client(fast_config(server.base_url()));
    client.complete(one_turn("same bytes"), GenConfig{});
    auto bodies = server.request_bodies();
    REQUIRE(bodies.size() == 3);
    CHECK(bodies[0] == bodies[1]);
    CHECK(bodies[1] == bodies[2]);
}

TEST_CASE("retry exhaustion is reported distinctly") {
    mock::Server server;
    server.fail_next(10, 500);
    BackendConfig cfg = fast_config(server.base_url());
    cfg.max_retries = 2;
    LlmClient client(cfg);
    CompletionResult result = client.complete(one_turn("never"), GenConfig{});
    CHECK(!result.ok());
    CHECK(result.error_kind == ErrorKind::retry_exhausted);
    CHECK(result.attempts == 3);
}

TEST_CASE("4xx responses are not retried") {
    mock::Server server;
    server.fail_next(1, 404);
    LlmClient client(fast_config(server.base_url()));
    CompletionResult result = client.complete(one_turn("gone"), GenConfig{});
    CHECK(!result.ok());
    CHECK(result.error_kind == ErrorKind::http_status);
    CHECK(result.attempts == 1);
}

TEST_CASE("dead socket with max_retries 0 is a transport error") {
    BackendConfig cfg = fast_config("http://127.0.0.1:1");
    cfg.max_retries = 0;
    cfg.request_timeout_s = 1.0;
    LlmClient client(cfg);
    CompletionResult result = client.complete(one_turn("x"), GenConfig{});
    CHECK(!result.ok());
    CHECK(result.error_kind == ErrorKind::transport);
}

TEST_CASE("malformed response bodies are flagged") {
    mock::Server server;
    server.set_reply([](const nlohmann::json&) { return ""; });
    LlmClient client(fast_config(server.base_url()));
    CompletionResult result = client.complete(one_turn("x"), GenConfig{});
    CHECK(!result.ok());
    CHECK(result.error_kind == ErrorKind::malformed_response);
}

TEST_CASE("the in-flight limiter caps concurrency") {
    mock::Server server;
    server.set_delay(std::chrono::milliseconds(30));
    BackendConfig cfg = fast_config(server.base_url());
    cfg.max_in_flight = 2;
    LlmClient client(cfg);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&client, i] {
            client.complete(one_turn("req " + std::to_string(i)), GenConfig{});
        });
    }
    for (auto& t : threads) t.join();
    CHECK(server.max_concurrent() <= 2);
    CHECK(server.request_bodies().size() == 8);
}

TEST_CASE("input over budget is truncated and flagged") {
    mock::Server server;
    LlmClient client(fast_config(server.base_url()));
    GenConfig gen;
    gen.input_budget_chars = 64;
    std::string big(500, 'a');
    CompletionResult result = client.complete(one_turn(big), gen);
    CHECK(result.ok());
    CHECK(result.input_truncated);
    auto bodies = server.request_bodies();
    REQUIRE(bodies.size() == 1);
    auto sent = nlohmann::json::parse(bodies[0]);
    CHECK(sent["messages"][0]["content"].get<std::string>().size() == 64);
}

TEST_CASE("temperature zero is sent verbatim unless a substitute is configured") {
    mock::Server server;
    {
        LlmClient client(fast_config(server.base_url()));
        client.complete(one_turn("t"), GenConfig{});
    }
    auto body = nlohmann::json::parse(server.request_bodies().at(0));
    CHECK(body["temperature"].get<double>() == 0.0);

    BackendConfig cfg = fast_config(server.base_url());
    cfg.temperature_zero_substitute = 1e-6;
    LlmClient client(cfg);
    client.complete(one_turn("t"), GenConfig{});
    body = nlohmann::json::parse(server.request_bodies().at(1));
    CHECK(body["temperature"].get<double>() == doctest::Approx(1e-6));
}

TEST_CASE("embed returns the scripted vector and validates inputs") {
    mock::Server server;
    server.set_embedding([](const std::string&) { return std::vector<double>{1.0, 0.0, 0.0}; });
    LlmClient client(fast_config(server.base_url()));
    EmbeddingVector v = client.embed("some text");
    CHECK(v.dim() == 3);
    CHECK(v.values[0] == 1.0);
    CHECK_THROWS_AS(client.embed(""), std::invalid_argument);

    EmbeddingVector again = client.embed("some text");
    CHECK(again.values == v.values);
}

TEST_CASE("embed surfaces backend errors as ClientError") {
    mock::Server server;
    server.fail_next(10, 500);
    BackendConfig cfg = fast_config(server.base_url());
    cfg.max_retries = 1;
    LlmClient client(cfg);
    CHECK_THROWS_AS(client.embed("x"), ClientError);
}

TEST_CASE("transcript entries are sequenced and replayable") {
    auto log_path = std::filesystem::temp_directory_path() / "sce_transcript_test.jsonl";
    std::filesystem::remove(log_path);
    mock::Server server;
    server.set_reply([](const nlohmann::json& req) {
        return "echo:" + req["messages"].back()["content"].get<std::string>();
    });
    {
        auto log = std::make_shared<TranscriptLog>(log_path);
        LlmClient client(fast_config(server.base_url()), log);
        client.complete(one_turn("alpha"), GenConfig{});
        client.complete(one_turn("beta"), GenConfig{});
        CHECK(log->entries_written() == 2);
    }
    // replaying the log reproduces the exchanges bit-exactly
    ScriptedBackend replay = ScriptedBackend::from_transcript(log_path);
    CHECK(replay.complete(one_turn("alpha"), GenConfig{}).text == "echo:alpha");
    CHECK(replay.complete(one_turn("beta"), GenConfig{}).text == "echo:beta");

    std::ifstream in(log_path);
    std::string line;
    std::uint64_t seq = 0;
    while (std::getline(in, line)) {
        auto entry = nlohmann::json::parse(line);
        CHECK(entry["seq"].get<std::uint64_t>() == seq++);
    }
    CHECK(seq == 2);
}

TEST_CASE("scripted backend is deterministic and conversation-keyed") {
    ScriptedBackend backend;
    Conversation a = one_turn("question A");
    Conversation b = one_turn("question B");
    backend.script_reply(a, "ANSWER: Yes");
    backend.script_reply(b, "ANSWER: No");
    CHECK(backend.complete(a, GenConfig{}).text == "ANSWER: Yes");
    CHECK(backend.complete(b, GenConfig{}).text == "ANSWER: No");
    // same last turn under a different history is a different key
    Conversation c = a;
    c.push_assistant("ANSWER: Yes");
    c.push_user("question B");
    CompletionResult miss = backend.complete(c, GenConfig{});
    CHECK(!miss.ok());
    backend.set_fallback_reply("fallback");
    CHECK(backend.complete(c, GenConfig{}).text == "fallback");
}

TEST_CASE("make_backend picks the scripted backend for mock URLs") {
    auto script_path = std::filesystem::temp_directory_path() / "sce_script_test.json";
    {
        std::ofstream out(script_path, std::ios::trunc);
        out << R"({"replies": [{"messages": [{"role": "user", "content": "hi"}],
                    "reply": "ANSWER: Positive"}]})";
    }
    BackendConfig cfg;
    cfg.base_url = "mock://" + script_path.string();
    cfg.model_name = "scripted";
    auto backend = make_backend(cfg);
    CHECK(backend->complete(one_turn("hi"), GenConfig{}).text == "ANSWER: Positive");
}
