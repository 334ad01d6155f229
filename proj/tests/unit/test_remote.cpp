#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>

#include "aer/embed.hpp"
#include "aer/errors.hpp"
#include "aer/llm_client.hpp"
#include "support/test_support.hpp"

using namespace aer;
using nlohmann::json;

namespace {

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit LocalServer(Handler handler) {
        server_.Post("/api", [this, handler](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mutex_);
                bodies_.push_back(json::parse(req.body));
                auth_ = req.get_header_value("Authorization");
            }
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api"; }
    std::vector<json> bodies() const {
        std::lock_guard lock(mutex_);
        return bodies_;
    }
    std::string last_auth() const {
        std::lock_guard lock(mutex_);
        return auth_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<json> bodies_;
    std::string auth_;
};

void reply_vectors(const httplib::Request& req, httplib::Response& res, std::size_t dim) {
    auto texts = json::parse(req.body)["texts"];
    json vecs = json::array();
    for (const auto& t : texts) {
        std::vector<double> v(dim, 0.0);
        v[t.get<std::string>().size() % dim] = 2.0;
        vecs.push_back(v);
    }
    res.set_content(json{{"vectors", vecs}}.dump(), "application/json");
}

EmbedderSpec remote_spec(const LocalServer& server, std::size_t dim) {
    EmbedderSpec spec;
    spec.kind = EmbedderKind::Remote;
    spec.endpoint = server.endpoint();
    spec.model = "test-model";
    spec.dim = dim;
    spec.backoff_initial_ms = 1;
    spec.backoff_max_ms = 4;
    spec.max_attempts = 3;
    spec.timeout_seconds = 5;
    return spec;
}

LlmClientSpec chat_spec(const LocalServer& server) {
    LlmClientSpec spec;
    spec.kind = LlmKind::Remote;
    spec.endpoint = server.endpoint();
    spec.model = "chat-model";
    spec.backoff_initial_ms = 1;
    spec.backoff_max_ms = 4;
    spec.max_attempts = 3;
    spec.timeout_seconds = 5;
    return spec;
}

}  // namespace

TEST_CASE("remote embedder splits requests into batches") {
    LocalServer server([](const httplib::Request& req, httplib::Response& res) { reply_vectors(req, res, 4); });
    auto spec = remote_spec(server, 4);
    spec.batch_size = 2;
    spec.max_in_flight = 1;
    spec.query_input_type = "search_query";
    RemoteEmbedder embedder(spec);

    std::vector<std::string> texts = {"a", "bb", "ccc", "dddd", "eeeee"};
    auto vecs = embedder.embed(texts, InputType::Query);
    REQUIRE(vecs.size() == 5);
    CHECK(embedder.requests_sent() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(vecs[i].dim() == 4);
        CHECK(vecs[i].values()[texts[i].size() % 4] == doctest::Approx(1.0));
    }
    auto bodies = server.bodies();
    REQUIRE(bodies.size() == 3);
    CHECK(bodies[0]["texts"] == json::array({"a", "bb"}));
    CHECK(bodies[2]["texts"] == json::array({"eeeee"}));
    CHECK(bodies[0]["model"] == "test-model");
    CHECK(bodies[0]["input_type"] == "search_query");
}

TEST_CASE("remote embedder retries throttling and server errors") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        int n = ++calls;
        if (n == 1) {
            res.status = 429;
        } else if (n == 2) {
            res.status = 503;
        } else {
            reply_vectors(req, res, 3);
        }
    });
    RemoteEmbedder embedder(remote_spec(server, 3));
    std::vector<std::string> texts = {"x"};
    auto vecs = embedder.embed(texts);
    CHECK(vecs.size() == 1);
    CHECK(calls.load() == 3);
}

TEST_CASE("remote embedder gives up after max attempts") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    RemoteEmbedder embedder(remote_spec(server, 3));
    std::vector<std::string> texts = {"x"};
    try {
        embedder.embed(texts);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 3);
    }
    CHECK(calls.load() == 3);
}

TEST_CASE("remote embedder fails immediately on client errors") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 401;
    });
    RemoteEmbedder embedder(remote_spec(server, 3));
    std::vector<std::string> texts = {"x"};
    CHECK_THROWS_AS(embedder.embed(texts), TransportError);
    CHECK(calls.load() == 1);
}

TEST_CASE("remote embedder rejects vectors of the wrong dimension") {
    LocalServer server([](const httplib::Request& req, httplib::Response& res) { reply_vectors(req, res, 5); });
    RemoteEmbedder embedder(remote_spec(server, 3));
    std::vector<std::string> texts = {"x", "y"};
    CHECK_THROWS_AS(embedder.embed(texts), EmbeddingError);
}

TEST_CASE("remote embedder rejects a short vector list") {
    LocalServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vectors":[[1,0,0]]})", "application/json");
    });
    RemoteEmbedder embedder(remote_spec(server, 3));
    std::vector<std::string> texts = {"x", "y"};
    CHECK_THROWS_AS(embedder.embed(texts), EmbeddingError);
}

TEST_CASE("remote embedder serves repeats from the vector cache") {
    aer::testing::TempDir cache("vcache");
    LocalServer server([](const httplib::Request& req, httplib::Response& res) { reply_vectors(req, res, 4); });
    auto spec = remote_spec(server, 4);
    spec.cache_dir = cache.path();

    std::vector<std::string> texts = {"alpha", "beta"};
    std::vector<EmbeddingVector> first;
    {
        RemoteEmbedder embedder(spec);
        first = embedder.embed(texts);
        CHECK(embedder.requests_sent() == 1);
    }
    RemoteEmbedder again(spec);
    auto second = again.embed(texts);
    CHECK(again.requests_sent() == 0);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(std::vector<double>(second[i].values().begin(), second[i].values().end()) ==
              std::vector<double>(first[i].values().begin(), first[i].values().end()));
    }

    std::vector<std::string> mixed = {"alpha", "gamma"};
    again.embed(mixed);
    CHECK(again.requests_sent() == 1);
    CHECK(server.bodies().back()["texts"] == json::array({"gamma"}));
}

TEST_CASE("remote embedder sends the bearer token from the environment") {
    LocalServer server([](const httplib::Request& req, httplib::Response& res) { reply_vectors(req, res, 2); });
    ::setenv("AER_TEST_EMBED_TOKEN", "s3cret", 1);
    auto spec = remote_spec(server, 2);
    spec.token_env = "AER_TEST_EMBED_TOKEN";
    RemoteEmbedder embedder(spec);
    std::vector<std::string> texts = {"x"};
    embedder.embed(texts);
    CHECK(server.last_auth() == "Bearer s3cret");
    ::unsetenv("AER_TEST_EMBED_TOKEN");
}

TEST_CASE("remote chat client reads both response shapes") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++calls % 2 == 1) {
            res.set_content(R"({"content":"<answer>A</answer>"})", "application/json");
        } else {
            res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"<answer>B</answer>"}}]})",
                            "application/json");
        }
    });
    RemoteChatClient client(chat_spec(server));
    ChatRequest req{"q1", "the prompt", 0.7, 0, 0};
    CHECK(client.complete(req) == "<answer>A</answer>");
    CHECK(client.complete(req) == "<answer>B</answer>");

    auto body = server.bodies().front();
    CHECK(body["model"] == "chat-model");
    CHECK(body["temperature"] == 0.7);
    REQUIRE(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "the prompt");
}

TEST_CASE("remote chat client retries then succeeds") {
    std::atomic<int> calls{0};
    LocalServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 502;
            return;
        }
        res.set_content(R"({"content":"ok"})", "application/json");
    });
    RemoteChatClient client(chat_spec(server));
    CHECK(client.complete(ChatRequest{"q", "p"}) == "ok");
    CHECK(client.requests_sent() == 3);
}

TEST_CASE("remote chat client stops on client errors and malformed replies") {
    std::atomic<int> calls{0};
    LocalServer bad_request([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 400;
    });
    RemoteChatClient client(chat_spec(bad_request));
    CHECK_THROWS_AS(client.complete(ChatRequest{"q", "p"}), TransportError);
    CHECK(calls.load() == 1);

    LocalServer malformed([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"unexpected":true})", "application/json");
    });
    RemoteChatClient other(chat_spec(malformed));
    CHECK_THROWS_AS(other.complete(ChatRequest{"q", "p"}), TransportError);
}

TEST_CASE("remote clients reject unusable configuration") {
    EmbedderSpec e;
    e.kind = EmbedderKind::Remote;
    CHECK_THROWS_AS(RemoteEmbedder{e}, ConfigError);
    LlmClientSpec l;
    l.kind = LlmKind::Remote;
    CHECK_THROWS_AS(RemoteChatClient{l}, ConfigError);
    l.endpoint = "localhost:8080/chat";
    CHECK_THROWS_AS(RemoteChatClient{l}, ConfigError);
}
