#include "llmrl/llm/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "llmrl/errors.hpp"

namespace llmrl::llm {
namespace {

std::string excerpt(const std::string& text, std::size_t limit) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

void ChatRequest::check() const {
    if (messages.empty()) throw UsageError("chat request needs at least one message");
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant") {
            throw UsageError("unknown chat role '" + m.role + "'");
        }
    }
    if (!(temperature >= 0.0)) throw UsageError("temperature must be non-negative");
    if (max_tokens <= 0) throw UsageError("max_tokens must be positive");
    if (!(timeout_seconds > 0.0)) throw UsageError("timeout must be positive");
}

nlohmann::json ChatRequest::to_json() const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}};
}

std::string prompt_hash(const ChatRequest& request) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;  // field separator
        h *= 1099511628211ULL;
    };
    for (const auto& m : request.messages) {
        mix(m.role);
        mix(m.content);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MockBackend::MockBackend(std::vector<std::string> replies) : sequence_(replies.begin(), replies.end()) {}

MockBackend MockBackend::keyed(const std::map<std::string, std::vector<std::string>>& replies) {
    MockBackend mock(std::vector<std::string>{});
    mock.keyed_mode_ = true;
    for (const auto& [hash, list] : replies) mock.keyed_[hash] = std::deque<std::string>(list.begin(), list.end());
    return mock;
}

MockBackend::MockBackend(MockBackend&& other) noexcept
    : sequence_(std::move(other.sequence_)),
      keyed_(std::move(other.keyed_)),
      keyed_mode_(other.keyed_mode_),
      calls_(other.calls_) {}

MockBackend MockBackend::from_json(const nlohmann::json& script) {
    if (script.contains("replies")) return MockBackend(script.at("replies").get<std::vector<std::string>>());
    if (script.contains("keyed")) {
        return keyed(script.at("keyed").get<std::map<std::string, std::vector<std::string>>>());
    }
    throw ConfigError("mock script needs 'replies' or 'keyed'");
}

std::string MockBackend::complete(const ChatRequest& request) {
    request.check();
    std::lock_guard lock(mutex_);
    ++calls_;
    if (!keyed_mode_) {
        if (sequence_.empty()) {
            throw MockExhaustedError("mock backend exhausted after " + std::to_string(calls_ - 1) + " replies");
        }
        std::string reply = std::move(sequence_.front());
        sequence_.pop_front();
        return reply;
    }
    const std::string hash = prompt_hash(request);
    auto it = keyed_.find(hash);
    if (it == keyed_.end() || it->second.empty()) {
        throw MockExhaustedError("mock backend has no reply left for prompt " + hash);
    }
    std::string reply = std::move(it->second.front());
    it->second.pop_front();
    return reply;
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

ResponderBackend::ResponderBackend(Responder responder, std::string name)
    : responder_(std::move(responder)), name_(std::move(name)) {
    if (!responder_) throw ConfigError("responder backend needs a callable");
}

std::string ResponderBackend::complete(const ChatRequest& request) {
    request.check();
    std::lock_guard lock(mutex_);
    return responder_(request);
}

HttpBackendConfig HttpBackendConfig::from_json(const nlohmann::json& j) {
    HttpBackendConfig c;
    if (j.contains("base_url")) j.at("base_url").get_to(c.base_url);
    if (j.contains("token_env")) j.at("token_env").get_to(c.token_env);
    if (j.contains("max_retries")) j.at("max_retries").get_to(c.max_retries);
    if (j.contains("initial_backoff_seconds")) j.at("initial_backoff_seconds").get_to(c.initial_backoff_seconds);
    if (j.contains("backoff_multiplier")) j.at("backoff_multiplier").get_to(c.backoff_multiplier);
    if (j.contains("max_backoff_seconds")) j.at("max_backoff_seconds").get_to(c.max_backoff_seconds);
    return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
    if (!(config_.initial_backoff_seconds >= 0.0) || !(config_.backoff_multiplier >= 1.0)) {
        throw ConfigError("backoff must be non-negative with a multiplier >= 1");
    }
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + config_.base_url);
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) path_prefix_ = config_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

double HttpBackend::backoff_seconds(int attempt) const {
    const double delay = config_.initial_backoff_seconds * std::pow(config_.backoff_multiplier, attempt);
    return std::min(delay, config_.max_backoff_seconds);
}

std::string HttpBackend::post_once(const ChatRequest& request, const std::string& token) {
    httplib::Client client(scheme_host_port_);
    const auto secs = static_cast<time_t>(request.timeout_seconds);
    const auto usecs = static_cast<time_t>((request.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    const auto result =
        client.Post(path_prefix_ + "/v1/chat/completions", headers, request.to_json().dump(), "application/json");
    if (!result) {
        const auto err = result.error();
        const std::string what = "request to " + config_.base_url + " failed: " + httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) throw TimeoutError(what);
        throw TransportError(what);
    }
    if (result->status < 200 || result->status >= 300) throw HttpStatusError(result->status, excerpt(result->body, 300));
    try {
        const auto body = nlohmann::json::parse(result->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed chat completion response: ") + e.what());
    }
}

std::string HttpBackend::complete(const ChatRequest& request) {
    request.check();
    std::string token;
    if (!config_.token_env.empty()) {
        if (const char* value = std::getenv(config_.token_env.c_str())) token = value;
    }
    if (!token.empty()) {
        for (const auto& m : request.messages) {
            if (m.content.find(token) != std::string::npos) {
                throw BackendError("refusing to send a prompt that contains the auth token");
            }
        }
    }
    for (int attempt = 0;; ++attempt) {
        try {
            return post_once(request, token);
        } catch (const HttpStatusError& e) {
            if (!retryable_status(e.status()) || attempt >= config_.max_retries) throw;
            spdlog::warn("chat completion attempt {} failed: {}", attempt + 1, e.what());
        } catch (const TimeoutError& e) {
            if (attempt >= config_.max_retries) throw;
            spdlog::warn("chat completion attempt {} timed out: {}", attempt + 1, e.what());
        } catch (const TransportError& e) {
            if (attempt >= config_.max_retries) throw;
            spdlog::warn("chat completion attempt {} failed: {}", attempt + 1, e.what());
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff_seconds(attempt)));
    }
}

nlohmann::json extract_json(const std::string& text) {
    std::size_t search = 0;
    while (true) {
        const std::size_t start = text.find('{', search);
        if (start == std::string::npos) break;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) break;  // unbalanced from here on
        try {
            return nlohmann::json::parse(text.substr(start, end - start + 1));
        } catch (const nlohmann::json::parse_error&) {
            search = start + 1;  // balanced but not valid JSON; try the next opening brace
        }
    }
    throw ExtractionError("no complete JSON object found in model output", text);
}

AuditLog::AuditLog(const std::string& path, std::size_t max_response_chars)
    : path_(path), max_chars_(max_response_chars), out_(path, std::ios::app) {
    if (!out_) throw ConfigError("cannot open audit log '" + path + "'");
}

void AuditLog::record(const ChatRequest& request, const std::string& response, const std::string& backend,
                      const std::string& status) {
    nlohmann::json row{{"timestamp", utc_timestamp()},
                       {"template", request.template_name},
                       {"prompt_hash", prompt_hash(request)},
                       {"backend", backend},
                       {"status", status},
                       {"response", excerpt(response, max_chars_)}};
    std::lock_guard lock(mutex_);
    out_ << row.dump() << '\n';
    out_.flush();
}

std::string complete_logged(LlmBackend& backend, const ChatRequest& request, AuditLog* audit) {
    try {
        std::string reply = backend.complete(request);
        if (audit) audit->record(request, reply, backend.name());
        return reply;
    } catch (const BackendError& e) {
        if (audit) audit->record(request, e.what(), backend.name(), "error");
        throw;
    }
}

nlohmann::json complete_json(LlmBackend& backend, ChatRequest request, const JsonValidator& validate,
                             AuditLog* audit) {
    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = complete_logged(backend, request, audit);
        try {
            nlohmann::json value = extract_json(reply);
            const auto problem = validate ? validate(value) : std::nullopt;
            if (!problem) return value;
            failure = *problem;
            if (attempt == 1) throw SchemaError("response failed validation after a re-prompt: " + failure);
        } catch (const ExtractionError& e) {
            failure = e.what();
            if (attempt == 1) throw;
        }
        request.messages.push_back({"assistant", reply});
        request.messages.push_back(
            {"user", "Your previous reply was rejected: " + failure + ". Reply again with a single JSON object only."});
    }
    throw SchemaError("unreachable");
}

}  // namespace llmrl::llm
