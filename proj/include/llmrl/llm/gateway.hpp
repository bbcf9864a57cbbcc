#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace llmrl::llm {

struct ChatMessage {
    std::string role;  // system, user or assistant
    std::string content;
};

struct ChatRequest {
    std::string model = "default";
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 1024;
    double timeout_seconds = 60.0;
    // Name of the template the request was rendered from; informational only.
    std::string template_name;

    /// Throws UsageError when the message list is empty or a role is unknown.
    void check() const;
    /// Wire body: {model, messages, temperature, max_tokens}.
    nlohmann::json to_json() const;
};

/// FNV-1a (64-bit) over every message role and content, as 16 hex digits.
std::string prompt_hash(const ChatRequest& request);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    /// Returns the raw assistant text.
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Canned replies, either consumed in order or keyed by prompt hash. Exhaustion throws
/// MockExhaustedError; replies are never reused. Safe to share across threads.
class MockBackend : public LlmBackend {
public:
    explicit MockBackend(std::vector<std::string> replies);
    /// Replies keyed by prompt_hash of the request; each key's replies are consumed in order.
    static MockBackend keyed(const std::map<std::string, std::vector<std::string>>& replies);

    /// {"replies": [...]} or {"keyed": {"<prompt hash>": [...]}}.
    static MockBackend from_json(const nlohmann::json& script);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }
    std::size_t calls() const;

    MockBackend(MockBackend&& other) noexcept;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> sequence_;
    std::map<std::string, std::deque<std::string>> keyed_;
    bool keyed_mode_ = false;
    std::size_t calls_ = 0;
};

/// Deterministic programmatic backend: the reply is a function of the request.
class ResponderBackend : public LlmBackend {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;
    explicit ResponderBackend(Responder responder, std::string name = "responder");

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return name_; }

private:
    Responder responder_;
    std::string name_;
    std::mutex mutex_;
};

struct HttpBackendConfig {
    std::string base_url = "http://127.0.0.1:8000";
    // Environment variable holding the bearer token; empty disables authentication.
    std::string token_env = "LLM_API_KEY";
    int max_retries = 2;
    double initial_backoff_seconds = 0.5;
    double backoff_multiplier = 2.0;
    double max_backoff_seconds = 8.0;

    static HttpBackendConfig from_json(const nlohmann::json& j);
};

/// POST {base}/v1/chat/completions; reply taken from choices[0].message.content.
/// Transport failures and 5xx/429 responses are retried with exponential backoff;
/// other non-2xx statuses fail immediately with HttpStatusError.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "http"; }

    /// Delay before retry number `attempt` (0-based).
    double backoff_seconds(int attempt) const;

private:
    std::string post_once(const ChatRequest& request, const std::string& token);

    HttpBackendConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// First syntactically complete top-level JSON object in `text`, found by balanced-brace
/// scanning that respects strings and escapes. Throws ExtractionError otherwise.
nlohmann::json extract_json(const std::string& text);

/// One JSONL line per backend call. Thread-safe.
class AuditLog {
public:
    explicit AuditLog(const std::string& path, std::size_t max_response_chars = 2000);

    void record(const ChatRequest& request, const std::string& response, const std::string& backend,
                const std::string& status = "ok");

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::size_t max_chars_;
    std::ofstream out_;
    std::mutex mutex_;
};

/// Calls the backend and records the exchange (including failures) when `audit` is set.
std::string complete_logged(LlmBackend& backend, const ChatRequest& request, AuditLog* audit);

/// Returns an error message when `value` misses required structure, nullopt when valid.
using JsonValidator = std::function<std::optional<std::string>(const nlohmann::json& value)>;

/// Completes, extracts JSON and validates it. On an extraction or validation failure the
/// request is repeated once with the failure appended; a second failure throws SchemaError
/// (or ExtractionError when no object could be found).
nlohmann::json complete_json(LlmBackend& backend, ChatRequest request, const JsonValidator& validate,
                             AuditLog* audit);

}  // namespace llmrl::llm
