#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sce/conversation.hpp"

namespace sce {

struct BackendConfig {
    std::string base_url;  // http(s)://host[:port], or mock://<script.json>
    std::string model_name;
    double request_timeout_s = 120.0;
    int max_retries = 3;
    int max_in_flight = 4;
    int retry_backoff_ms = 250;
    // Name of the environment variable holding the bearer token, if any.
    std::string api_key_env = "SCE_API_KEY";
    // Some servers reject temperature 0; when set, 0 is replaced by this
    // value on the wire. Off by default so the configured setting is sent
    // verbatim.
    std::optional<double> temperature_zero_substitute;

    nlohmann::json to_json() const;
    static BackendConfig from_json(const nlohmann::json& j);
};

struct GenConfig {
    double temperature = 0.0;
    int max_new_tokens = 500;
    // Client-side stand-in for server-side token truncation at
    // max_length=512: roughly four characters per token.
    int input_budget_chars = 4 * 512;

    nlohmann::json to_json() const;
    static GenConfig from_json(const nlohmann::json& j);
};

enum class FinishReason { stop, length, error };
enum class ErrorKind { none, transport, http_status, malformed_response, retry_exhausted };

std::string_view finish_reason_name(FinishReason r);
std::string_view error_kind_name(ErrorKind k);

struct CompletionResult {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    double latency_s = 0.0;
    ErrorKind error_kind = ErrorKind::none;
    std::string error_message;
    int attempts = 1;
    bool input_truncated = false;

    bool ok() const { return finish_reason != FinishReason::error; }
};

struct EmbeddingVector {
    std::vector<double> values;
    int dim() const { return static_cast<int>(values.size()); }
};

class ClientError : public std::runtime_error {
public:
    ClientError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Anything that can answer chat completions and embedding requests: the
// HTTP client or a scripted stand-in.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual CompletionResult complete(const Conversation& conv, const GenConfig& gen) = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

// Append-only JSONL log of request/response pairs with a monotone
// sequence number. Replaying a log through ScriptedBackend reproduces the
// original outputs.
class TranscriptLog {
public:
    explicit TranscriptLog(const std::filesystem::path& path);
    void append(nlohmann::json entry);  // adds "seq"
    std::uint64_t entries_written() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// OpenAI-compatible client: POST {base_url}/v1/chat/completions and
// {base_url}/v1/embeddings, with bounded retries (exponential backoff on
// transport errors, 5xx and 429) and a max_in_flight concurrency cap.
class LlmClient final : public ChatBackend {
public:
    explicit LlmClient(BackendConfig config, std::shared_ptr<TranscriptLog> transcript = nullptr);
    ~LlmClient() override;

    CompletionResult complete(const Conversation& conv, const GenConfig& gen) override;
    // Throws ClientError with the same taxonomy complete() reports.
    EmbeddingVector embed(const std::string& text) override;

    const BackendConfig& config() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Deterministic scripted backend keyed on exact conversation content.
// Latency is reported as zero so stores produced against it are
// bit-reproducible.
class ScriptedBackend final : public ChatBackend {
public:
    ScriptedBackend() = default;
    ScriptedBackend(ScriptedBackend&& other) noexcept
        : replies_(std::move(other.replies_)),
          embeddings_(std::move(other.embeddings_)),
          fallback_reply_(std::move(other.fallback_reply_)),
          completions_served_(other.completions_served_.load()) {}
    ScriptedBackend& operator=(ScriptedBackend&& other) noexcept {
        replies_ = std::move(other.replies_);
        embeddings_ = std::move(other.embeddings_);
        fallback_reply_ = std::move(other.fallback_reply_);
        completions_served_.store(other.completions_served_.load());
        return *this;
    }

    void script_reply(const Conversation& conv, std::string reply);
    void script_embedding(const std::string& text, std::vector<double> values);
    // Unscripted conversations produce an error result by default; a
    // fallback reply makes the backend total.
    void set_fallback_reply(std::string reply);

    CompletionResult complete(const Conversation& conv, const GenConfig& gen) override;
    EmbeddingVector embed(const std::string& text) override;

    int completions_served() const { return completions_served_.load(); }

    // Script file: {"replies": [{"messages": [{role, content}...], "reply": ...}...],
    //               "embeddings": [{"text": ..., "values": [...]}, ...],
    //               "fallback_reply": ...?}
    static ScriptedBackend from_file(const std::filesystem::path& path);
    // Rebuild a backend from a transcript log, for replay.
    static ScriptedBackend from_transcript(const std::filesystem::path& path);

private:
    // complete() is called from the pipeline's worker threads; the script
    // tables are immutable once a run starts, the counter must be atomic
    std::map<std::uint64_t, std::string> replies_;
    std::map<std::string, std::vector<double>> embeddings_;
    std::optional<std::string> fallback_reply_;
    std::atomic<int> completions_served_{0};
};

// LlmClient for http(s) URLs, ScriptedBackend for mock://<script-path>.
std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config,
                                          std::shared_ptr<TranscriptLog> transcript = nullptr);

}  // namespace sce
