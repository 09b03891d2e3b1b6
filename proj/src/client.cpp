#include "sce/client.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace sce {

namespace {

using nlohmann::json;

class InFlightLimiter {
public:
    explicit InFlightLimiter(int capacity) : capacity_(capacity) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return active_ < capacity_; });
        ++active_;
    }

    void release() {
        {
            std::lock_guard lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int capacity_;
    int active_ = 0;
};

struct LimiterGuard {
    explicit LimiterGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~LimiterGuard() { limiter.release(); }
    InFlightLimiter& limiter;
};

struct HttpOutcome {
    bool ok = false;
    ErrorKind kind = ErrorKind::none;
    std::string error;
    int status = 0;
    std::string body;
    bool retryable = false;
};

}  // namespace

json BackendConfig::to_json() const {
    json j{{"base_url", base_url},
           {"model_name", model_name},
           {"request_timeout_s", request_timeout_s},
           {"max_retries", max_retries},
           {"max_in_flight", max_in_flight},
           {"retry_backoff_ms", retry_backoff_ms},
           {"api_key_env", api_key_env}};
    if (temperature_zero_substitute) j["temperature_zero_substitute"] = *temperature_zero_substitute;
    return j;
}

BackendConfig BackendConfig::from_json(const json& j) {
    BackendConfig c;
    c.base_url = j.at("base_url").get<std::string>();
    c.model_name = j.at("model_name").get<std::string>();
    c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.retry_backoff_ms = j.value("retry_backoff_ms", c.retry_backoff_ms);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    if (j.contains("temperature_zero_substitute"))
        c.temperature_zero_substitute = j["temperature_zero_substitute"].get<double>();
    if (c.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    if (c.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    return c;
}

json GenConfig::to_json() const {
    return json{{"temperature", temperature},
                {"max_new_tokens", max_new_tokens},
                {"input_budget_chars", input_budget_chars}};
}

GenConfig GenConfig::from_json(const json& j) {
    GenConfig g;
    g.temperature = j.value("temperature", g.temperature);
    g.max_new_tokens = j.value("max_new_tokens", g.max_new_tokens);
    g.input_budget_chars = j.value("input_budget_chars", g.input_budget_chars);
    if (g.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
    return g;
}

std::string_view finish_reason_name(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "?";
}

std::string_view error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::none: return "none";
        case ErrorKind::transport: return "transport";
        case ErrorKind::http_status: return "http_status";
        case ErrorKind::malformed_response: return "malformed_response";
        case ErrorKind::retry_exhausted: return "retry_exhausted";
    }
    return "?";
}

struct TranscriptLog::Impl {
    std::mutex mu;
    std::ofstream out;
    std::uint64_t seq = 0;
};

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : impl_(std::make_shared<Impl>()) {
    impl_->out.open(path, std::ios::app);
    if (!impl_->out) throw std::runtime_error("cannot open transcript log " + path.string());
}

void TranscriptLog::append(json entry) {
    std::lock_guard lock(impl_->mu);
    entry["seq"] = impl_->seq++;
    impl_->out << entry.dump() << "\n";
    impl_->out.flush();
}

std::uint64_t TranscriptLog::entries_written() const {
    std::lock_guard lock(impl_->mu);
    return impl_->seq;
}

struct LlmClient::Impl {
    BackendConfig config;
    std::shared_ptr<TranscriptLog> transcript;
    InFlightLimiter limiter;
    std::string host;   // scheme://host[:port]
    std::string token;  // bearer token, possibly empty

    Impl(BackendConfig cfg, std::shared_ptr<TranscriptLog> log)
        : config(std::move(cfg)), transcript(std::move(log)), limiter(config.max_in_flight) {
        if (config.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
        if (config.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
        host = config.base_url;
        while (!host.empty() && host.back() == '/') host.pop_back();
        if (!config.api_key_env.empty()) {
            if (const char* v = std::getenv(config.api_key_env.c_str())) token = v;
        }
    }

    HttpOutcome post_once(const std::string& path, const std::string& body) {
        HttpOutcome out;
        httplib::Client cli(host);
        cli.set_connection_timeout(std::chrono::milliseconds(
            static_cast<int>(config.request_timeout_s * 1000)));
        cli.set_read_timeout(std::chrono::milliseconds(
            static_cast<int>(config.request_timeout_s * 1000)));
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            out.kind = ErrorKind::transport;
            out.error = httplib::to_string(res.error());
            out.retryable = true;
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        if (res->status < 200 || res->status >= 300) {
            out.kind = ErrorKind::http_status;
            out.error = "HTTP " + std::to_string(res->status);
            out.retryable = res->status >= 500 || res->status == 429;
            return out;
        }
        out.ok = true;
        return out;
    }

    // Retries keep the request body byte-identical to the original.
    HttpOutcome post_with_retries(const std::string& path, const std::string& body,
                                  int& attempts) {
        HttpOutcome out;
        attempts = 0;
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            ++attempts;
            out = post_once(path, body);
            if (out.ok || !out.retryable) return out;
            if (attempt < config.max_retries) {
                int delay = config.retry_backoff_ms << std::min(attempt, 6);
                std::this_thread::sleep_for(std::chrono::milliseconds(std::min(delay, 8000)));
            }
        }
        if (config.max_retries > 0) out.kind = ErrorKind::retry_exhausted;
        return out;
    }
};

LlmClient::LlmClient(BackendConfig config, std::shared_ptr<TranscriptLog> transcript)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(transcript))) {}

LlmClient::~LlmClient() = default;

const BackendConfig& LlmClient::config() const { return impl_->config; }

CompletionResult LlmClient::complete(const Conversation& conv, const GenConfig& gen) {
    if (conv.empty() || !conv.ends_with_user())
        throw std::invalid_argument("conversation must be non-empty and end with a user turn");

    json messages = conv.to_json();
    bool truncated = false;
    if (gen.input_budget_chars > 0) {
        std::size_t total = 0;
        for (const auto& m : messages) total += m["content"].get_ref<const std::string&>().size();
        std::size_t budget = static_cast<std::size_t>(gen.input_budget_chars);
        if (total > budget) {
            // trim the tail of the final user turn down to the budget
            std::string& last = messages.back()["content"].get_ref<std::string&>();
            std::size_t overflow = total - budget;
            last.resize(last.size() > overflow ? last.size() - overflow : 1);
            truncated = true;
        }
    }
    double temperature = gen.temperature;
    if (temperature == 0.0 && impl_->config.temperature_zero_substitute)
        temperature = *impl_->config.temperature_zero_substitute;
    json request{{"model", impl_->config.model_name},
                 {"messages", messages},
                 {"temperature", temperature},
                 {"max_tokens", gen.max_new_tokens}};
    std::string body = request.dump();

    CompletionResult result;
    result.input_truncated = truncated;
    auto t0 = std::chrono::steady_clock::now();
    HttpOutcome out;
    {
        LimiterGuard guard(impl_->limiter);
        out = impl_->post_with_retries("/v1/chat/completions", body, result.attempts);
    }
    result.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!out.ok) {
        result.finish_reason = FinishReason::error;
        result.error_kind = out.kind;
        result.error_message = out.error;
    } else {
        json parsed = json::parse(out.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
            !parsed["choices"][0].contains("message")) {
            result.finish_reason = FinishReason::error;
            result.error_kind = ErrorKind::malformed_response;
            result.error_message = "unexpected chat completion body";
        } else {
            const json& choice = parsed["choices"][0];
            result.text = choice["message"].value("content", std::string());
            std::string finish = choice.value("finish_reason", "stop");
            result.finish_reason = finish == "length" ? FinishReason::length : FinishReason::stop;
            if (result.text.empty()) {
                result.finish_reason = FinishReason::error;
                result.error_kind = ErrorKind::malformed_response;
                result.error_message = "empty completion text";
            }
        }
    }

    if (impl_->transcript) {
        impl_->transcript->append(json{{"kind", "chat"},
                                       {"request", request},
                                       {"response_text", result.text},
                                       {"finish_reason", std::string(finish_reason_name(result.finish_reason))},
                                       {"error_kind", std::string(error_kind_name(result.error_kind))},
                                       {"attempts", result.attempts},
                                       {"latency_s", result.latency_s},
                                       {"input_truncated", result.input_truncated}});
    }
    return result;
}

EmbeddingVector LlmClient::embed(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("embed: empty text");
    json request{{"model", impl_->config.model_name}, {"input", text}};
    std::string body = request.dump();

    int attempts = 0;
    HttpOutcome out;
    {
        LimiterGuard guard(impl_->limiter);
        out = impl_->post_with_retries("/v1/embeddings", body, attempts);
    }
    if (!out.ok) throw ClientError(out.kind, out.error);

    json parsed = json::parse(out.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || parsed["data"].empty() ||
        !parsed["data"][0].contains("embedding"))
        throw ClientError(ErrorKind::malformed_response, "unexpected embeddings body");
    EmbeddingVector vec;
    for (const auto& v : parsed["data"][0]["embedding"]) vec.values.push_back(v.get<double>());
    if (vec.values.empty()) throw ClientError(ErrorKind::malformed_response, "empty embedding");
    for (double v : vec.values) {
        if (!std::isfinite(v)) throw ClientError(ErrorKind::malformed_response, "non-finite embedding");
    }
    if (impl_->transcript) {
        impl_->transcript->append(json{{"kind", "embed"},
                                       {"request", request},
                                       {"response_values", vec.values},
                                       {"attempts", attempts}});
    }
    return vec;
}

void ScriptedBackend::script_reply(const Conversation& conv, std::string reply) {
    replies_[conv.fingerprint()] = std::move(reply);
}

void ScriptedBackend::script_embedding(const std::string& text, std::vector<double> values) {
    embeddings_[text] = std::move(values);
}

void ScriptedBackend::set_fallback_reply(std::string reply) { fallback_reply_ = std::move(reply); }

CompletionResult ScriptedBackend::complete(const Conversation& conv, const GenConfig&) {
    if (conv.empty() || !conv.ends_with_user())
        throw std::invalid_argument("conversation must be non-empty and end with a user turn");
    ++completions_served_;
    CompletionResult result;
    auto it = replies_.find(conv.fingerprint());
    if (it != replies_.end()) {
        result.text = it->second;
    } else if (fallback_reply_) {
        result.text = *fallback_reply_;
    } else {
        result.finish_reason = FinishReason::error;
        result.error_kind = ErrorKind::transport;
        result.error_message = "no scripted reply for conversation";
    }
    return result;
}

EmbeddingVector ScriptedBackend::embed(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("embed: empty text");
    auto it = embeddings_.find(text);
    if (it == embeddings_.end())
        throw ClientError(ErrorKind::transport, "no scripted embedding for text");
    return {it->second};
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script " + path.string());
    json j = json::parse(in);
    ScriptedBackend backend;
    for (const auto& entry : j.value("replies", json::array()))
        backend.script_reply(Conversation::from_json(entry.at("messages")),
                             entry.at("reply").get<std::string>());
    for (const auto& entry : j.value("embeddings", json::array()))
        backend.script_embedding(entry.at("text").get<std::string>(),
                                 entry.at("values").get<std::vector<double>>());
    if (j.contains("fallback_reply")) backend.set_fallback_reply(j["fallback_reply"].get<std::string>());
    return backend;
}

ScriptedBackend ScriptedBackend::from_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open transcript " + path.string());
    ScriptedBackend backend;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (j.value("kind", "") == "chat") {
            backend.script_reply(Conversation::from_json(j.at("request").at("messages")),
                                 j.at("response_text").get<std::string>());
        } else if (j.value("kind", "") == "embed") {
            backend.script_embedding(j.at("request").at("input").get<std::string>(),
                                     j.at("response_values").get<std::vector<double>>());
        }
    }
    return backend;
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config,
                                          std::shared_ptr<TranscriptLog> transcript) {
    constexpr std::string_view mock_scheme = "mock://";
    if (config.base_url.rfind(mock_scheme, 0) == 0) {
        auto backend = std::make_unique<ScriptedBackend>();
        *backend = ScriptedBackend::from_file(config.base_url.substr(mock_scheme.size()));
        return backend;
    }
    return std::make_unique<LlmClient>(config, std::move(transcript));
}

}  // namespace sce
