#pragma once

// Pluggable chat-completion clients: two deterministic mocks for tests and
// offline runs, and a generic HTTP client.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace aer {

struct ChatRequest {
    std::string question_id;
    std::string prompt;
    double temperature = 1.0;
    int sample_index = 0;
    int attempt = 0;  // 0 for the first request of a sample, then 1, 2, ... on re-requests
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    /// Returns the raw response text. Throws TransportError when the call
    /// cannot be completed.
    virtual std::string complete(const ChatRequest& request) = 0;
};

enum class LlmKind { MockScripted, MockOverlap, Remote };

struct LlmClientSpec {
    LlmKind kind = LlmKind::MockOverlap;

    // mock-scripted
    std::filesystem::path script_path;

    // remote
    std::string endpoint;
    std::string model;
    std::string token_env;
    int max_attempts = 4;
    int backoff_initial_ms = 500;
    int backoff_max_ms = 8000;
    int timeout_seconds = 120;
};

/// Replays canned responses. The script is a JSON object mapping question
/// id to a list of samples; a sample is either a response string or a list
/// of per-attempt strings. Indices past the end reuse the last entry. A
/// "*" key, if present, serves questions without their own entry.
class ScriptedMockClient final : public LlmClient {
public:
    using Sample = std::vector<std::string>;
    explicit ScriptedMockClient(std::map<std::string, std::vector<Sample>> script);
    ScriptedMockClient(ScriptedMockClient&& other) noexcept : script_(std::move(other.script_)) {}
    static ScriptedMockClient from_json(std::string_view json_text);
    static ScriptedMockClient from_file(const std::filesystem::path& path);

    std::string complete(const ChatRequest& request) override;
    std::size_t calls() const { return calls_.load(); }

private:
    std::map<std::string, std::vector<Sample>> script_;
    std::atomic<std::size_t> calls_{0};
};

/// Reads the options and context documents back out of a rendered prompt
/// and selects every option whose content-word overlap with the context is
/// maximal. Always answers in the expected output format.
class OverlapMockClient final : public LlmClient {
public:
    std::string complete(const ChatRequest& request) override;
};

/// POST {model, messages:[{role:"user", content}], temperature} and read
/// `content` (or `choices[0].message.content`) from the reply. 429 and 5xx
/// are retried with exponential backoff; other 4xx fail immediately.
class RemoteChatClient final : public LlmClient {
public:
    explicit RemoteChatClient(LlmClientSpec spec);
    std::string complete(const ChatRequest& request) override;
    std::size_t requests_sent() const { return requests_.load(); }

private:
    LlmClientSpec spec_;
    std::string token_;
    std::atomic<std::size_t> requests_{0};
};

std::unique_ptr<LlmClient> make_llm_client(const LlmClientSpec& spec);

const char* to_string(LlmKind kind);
LlmKind llm_kind_from_string(std::string_view name);  // throws ConfigError

}  // namespace aer
