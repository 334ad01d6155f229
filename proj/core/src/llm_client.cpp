#include "aer/llm_client.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <httplib.h>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "aer/errors.hpp"
#include "aer/letters.hpp"
#include "aer/lexindex.hpp"

namespace aer {

using json = nlohmann::json;

ScriptedMockClient::ScriptedMockClient(std::map<std::string, std::vector<Sample>> script)
    : script_(std::move(script)) {
    for (const auto& [id, samples] : script_) {
        if (samples.empty()) throw ConfigError("llm script: question '" + id + "' has no samples");
        for (const auto& s : samples) {
            if (s.empty()) throw ConfigError("llm script: question '" + id + "' has an empty attempt list");
        }
    }
}

ScriptedMockClient ScriptedMockClient::from_json(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("llm script: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("llm script: top level must be an object");
    std::map<std::string, std::vector<Sample>> script;
    for (const auto& [id, samples] : root.items()) {
        if (!samples.is_array()) throw ConfigError("llm script: entry '" + id + "' must be a list");
        auto& out = script[id];
        for (const auto& s : samples) {
            if (s.is_string()) {
                out.push_back({s.get<std::string>()});
            } else if (s.is_array()) {
                out.push_back(s.get<std::vector<std::string>>());
            } else {
                throw ConfigError("llm script: entry '" + id + "' has a sample that is neither string nor list");
            }
        }
    }
    return ScriptedMockClient(std::move(script));
}

ScriptedMockClient ScriptedMockClient::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("llm script: cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string ScriptedMockClient::complete(const ChatRequest& request) {
    ++calls_;
    auto it = script_.find(request.question_id);
    if (it == script_.end()) it = script_.find("*");
    if (it == script_.end()) {
        throw TransportError("scripted mock: no script for question '" + request.question_id + "'", 1);
    }
    const auto& samples = it->second;
    const auto& attempts = samples[std::min<std::size_t>(static_cast<std::size_t>(request.sample_index), samples.size() - 1)];
    return attempts[std::min<std::size_t>(static_cast<std::size_t>(request.attempt), attempts.size() - 1)];
}

namespace {

std::string unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '&') {
            if (s.substr(i, 5) == "&amp;") { out += '&'; i += 4; continue; }
            if (s.substr(i, 4) == "&lt;") { out += '<'; i += 3; continue; }
            if (s.substr(i, 4) == "&gt;") { out += '>'; i += 3; continue; }
        }
        out += s[i];
    }
    return out;
}

// Content of the last <tag>...</tag> block.
std::string_view last_block(std::string_view text, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    auto start = text.rfind(open);
    if (start == std::string_view::npos) return {};
    start += open.size();
    auto end = text.find(close, start);
    if (end == std::string_view::npos) return {};
    return text.substr(start, end - start);
}

std::set<std::string> content_words(std::string_view text) {
    std::set<std::string> out;
    for (auto& t : tokenize(text)) {
        if (!is_stopword(t)) out.insert(std::move(t));
    }
    return out;
}

}  // namespace

std::string OverlapMockClient::complete(const ChatRequest& request) {
    std::string_view prompt = request.prompt;
    // The template itself describes the input format; only the filled-in
    // blocks after it are evidence.
    auto body_start = prompt.rfind("</input_format>");
    std::string_view body = body_start == std::string_view::npos ? prompt : prompt.substr(0, body_start);
    auto context = content_words(unescape(last_block(body, "context_documents")));

    std::array<double, 4> scores{};
    std::ostringstream analysis;
    for (Letter l : kAllLetters) {
        std::string tag = std::string("option_") + static_cast<char>('a' + index_of(l));
        auto words = content_words(unescape(last_block(body, tag)));
        std::size_t hit = 0;
        for (const auto& w : words) hit += context.contains(w) ? 1 : 0;
        double score = words.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(words.size());
        scores[static_cast<std::size_t>(index_of(l))] = score;
        analysis << "Option " << to_char(l) << ": " << hit << " of " << words.size()
                 << " content words appear in the context.\n";
    }
    double best = *std::max_element(scores.begin(), scores.end());
    LetterSet pick;
    for (Letter l : kAllLetters) {
        if (scores[static_cast<std::size_t>(index_of(l))] == best) pick.insert(l);
    }
    return "<analysis>\n" + analysis.str() + "</analysis>\n\n<answer>\n" + pick.to_string() + "\n</answer>";
}

RemoteChatClient::RemoteChatClient(LlmClientSpec spec) : spec_(std::move(spec)) {
    if (spec_.endpoint.empty()) throw ConfigError("remote llm: endpoint is required");
    if (spec_.endpoint.find("://") == std::string::npos) {
        throw ConfigError("remote llm: endpoint must include a scheme: '" + spec_.endpoint + "'");
    }
    if (!spec_.token_env.empty()) {
        if (const char* tok = std::getenv(spec_.token_env.c_str())) token_ = tok;
    }
}

std::string RemoteChatClient::complete(const ChatRequest& request) {
    auto scheme = spec_.endpoint.find("://");
    auto slash = spec_.endpoint.find('/', scheme + 3);
    std::string host = slash == std::string::npos ? spec_.endpoint : spec_.endpoint.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : spec_.endpoint.substr(slash);

    json body = {{"model", spec_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
                 {"temperature", request.temperature}};
    std::string payload = body.dump();

    httplib::Client client(host);
    client.set_connection_timeout(spec_.timeout_seconds, 0);
    client.set_read_timeout(spec_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::string last_error;
    int backoff = spec_.backoff_initial_ms;
    for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
        ++requests_;
        auto res = client.Post(path, headers, payload, "application/json");
        if (res && res->status == 200) {
            try {
                json reply = json::parse(res->body);
                if (reply.contains("content")) return reply.at("content").get<std::string>();
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw TransportError(std::string("remote llm: malformed response: ") + e.what(), attempt);
            }
        }
        if (res) {
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status != 429 && res->status < 500) throw TransportError("remote llm: " + last_error, attempt);
        } else {
            last_error = httplib::to_string(res.error());
        }
        spdlog::debug("remote llm: attempt {} for {} failed: {}", attempt, request.question_id, last_error);
        if (attempt < spec_.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff = std::min(backoff * 2, spec_.backoff_max_ms);
        }
    }
    throw TransportError("remote llm: " + last_error, spec_.max_attempts);
}

std::unique_ptr<LlmClient> make_llm_client(const LlmClientSpec& spec) {
    switch (spec.kind) {
        case LlmKind::MockScripted:
            return std::make_unique<ScriptedMockClient>(ScriptedMockClient::from_file(spec.script_path));
        case LlmKind::MockOverlap: return std::make_unique<OverlapMockClient>();
        case LlmKind::Remote: return std::make_unique<RemoteChatClient>(spec);
    }
    throw ConfigError("unknown llm kind");
}

const char* to_string(LlmKind kind) {
    switch (kind) {
        case LlmKind::MockScripted: return "mock-scripted";
        case LlmKind::MockOverlap: return "mock-overlap";
        case LlmKind::Remote: return "remote";
    }
    return "unknown";
}

LlmKind llm_kind_from_string(std::string_view name) {
    if (name == "mock-scripted") return LlmKind::MockScripted;
    if (name == "mock-overlap") return LlmKind::MockOverlap;
    if (name == "remote") return LlmKind::Remote;
    throw ConfigError("unknown llm kind '" + std::string(name) + "' (expected mock-scripted, mock-overlap or remote)");
}

}  // namespace aer
