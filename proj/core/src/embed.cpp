#include "aer/embed.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <httplib.h>
#include <json.hpp>
#include <map>
#include <sstream>
#include <thread>

#include "aer/errors.hpp"
#include "aer/hashing.hpp"

namespace aer {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [-1, 1) from the top 53 bits.
double unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

const char* input_type_name(InputType t) { return t == InputType::Query ? "query" : "document"; }

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("embedder endpoint must include a scheme: '" + url + "'");
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
    if (values.empty()) throw EmbeddingError("embedding: empty vector");
    double sq = 0.0;
    for (double v : values) sq += v * v;
    double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw EmbeddingError("embedding: vector has zero or non-finite norm");
    for (double& v : values) v /= norm;
    return EmbeddingVector(std::move(values));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim()) {
        throw EmbeddingError("cosine: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                             std::to_string(v.dim()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) dot += u[i] * v[i];
    return dot;
}

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw EmbeddingError("mock embedder: dim must be positive");
}

EmbeddingVector MockEmbedder::embed_one(std::string_view text) const {
    std::string padded = "\x02\x02";
    padded.reserve(text.size() + 4);
    for (char c : text) padded.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    padded += "\x03\x03";

    std::map<std::uint64_t, int> grams;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) ++grams[fnv1a(std::string_view(padded).substr(i, 3))];

    std::vector<double> acc(dim_, 0.0);
    std::uint64_t seed_mix = splitmix64(seed_);
    for (const auto& [hash, count] : grams) {
        std::uint64_t state = hash ^ seed_mix;
        for (std::size_t d = 0; d < dim_; ++d) {
            state = splitmix64(state);
            acc[d] += static_cast<double>(count) * unit_interval(state);
        }
    }
    return EmbeddingVector::normalized(std::move(acc));
}

std::vector<EmbeddingVector> MockEmbedder::embed(std::span<const std::string> texts, InputType) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

VectorCache::VectorCache(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path VectorCache::path_for(const std::string& model, InputType type, const std::string& text) const {
    std::string key = sha256_hex(model + '\0' + input_type_name(type) + '\0' + text);
    return root_ / sha256_hex(model).substr(0, 16) / (key + ".json");
}

std::optional<EmbeddingVector> VectorCache::get(const std::string& model, InputType type,
                                                const std::string& text) const {
    auto path = path_for(model, type, text);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        return EmbeddingVector::normalized(j.get<std::vector<double>>());
    } catch (const std::exception& e) {
        spdlog::warn("vector cache: ignoring unreadable entry {}: {}", path.string(), e.what());
        return std::nullopt;
    }
}

void VectorCache::put(const std::string& model, InputType type, const std::string& text, const EmbeddingVector& v) {
    auto path = path_for(model, type, text);
    std::lock_guard lock(write_mutex_);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << json(std::vector<double>(v.values().begin(), v.values().end())).dump();
    }
    std::filesystem::rename(tmp, path);
}

struct RemoteEmbedder::Counters {
    std::atomic<std::size_t> requests{0};
};

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec) : spec_(std::move(spec)), counters_(std::make_unique<Counters>()) {
    if (spec_.endpoint.empty()) throw ConfigError("remote embedder: endpoint is required");
    if (spec_.batch_size == 0) throw ConfigError("remote embedder: batch_size must be positive");
    if (spec_.max_in_flight == 0) spec_.max_in_flight = 1;
    if (!spec_.token_env.empty()) {
        if (const char* tok = std::getenv(spec_.token_env.c_str())) token_ = tok;
    }
    if (!spec_.cache_dir.empty()) cache_ = std::make_unique<VectorCache>(spec_.cache_dir);
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::size_t RemoteEmbedder::requests_sent() const { return counters_->requests.load(); }

std::vector<EmbeddingVector> RemoteEmbedder::fetch_batch(std::span<const std::string> texts, InputType type) {
    Endpoint ep = split_endpoint(spec_.endpoint);
    json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())},
                 {"model", spec_.model},
                 {"input_type", type == InputType::Query ? spec_.query_input_type : spec_.document_input_type}};
    std::string payload = body.dump();

    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(spec_.timeout_seconds, 0);
    client.set_read_timeout(spec_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::string last_error;
    int backoff = spec_.backoff_initial_ms;
    for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
        ++counters_->requests;
        auto res = client.Post(ep.path, headers, payload, "application/json");
        if (res && res->status == 200) {
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw EmbeddingError(std::string("remote embedder: malformed response: ") + e.what());
            }
            auto vecs = reply.value("vectors", json::array());
            if (!vecs.is_array() || vecs.size() != texts.size()) {
                throw EmbeddingError("remote embedder: expected " + std::to_string(texts.size()) + " vectors, got " +
                                     std::to_string(vecs.is_array() ? vecs.size() : 0));
            }
            std::vector<EmbeddingVector> out;
            out.reserve(vecs.size());
            for (const auto& v : vecs) {
                auto values = v.get<std::vector<double>>();
                if (values.size() != spec_.dim) {
                    throw EmbeddingError("remote embedder: dimension mismatch (expected " + std::to_string(spec_.dim) +
                                         ", got " + std::to_string(values.size()) + ")");
                }
                out.push_back(EmbeddingVector::normalized(std::move(values)));
            }
            return out;
        }
        if (res) {
            last_error = "HTTP " + std::to_string(res->status);
            bool retryable = res->status == 429 || res->status >= 500;
            if (!retryable) throw TransportError("remote embedder: " + last_error, attempt);
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < spec_.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff = std::min(backoff * 2, spec_.backoff_max_ms);
        }
    }
    throw TransportError("remote embedder: " + last_error, spec_.max_attempts);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts, InputType type) {
    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache_) slots[i] = cache_->get(spec_.model, type, texts[i]);
        if (!slots[i]) missing.push_back(i);
    }

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < missing.size(); i += spec_.batch_size) {
        batches.emplace_back(missing.begin() + static_cast<std::ptrdiff_t>(i),
                             missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), i + spec_.batch_size)));
    }

    // At most max_in_flight batches are outstanding at once.
    for (std::size_t wave = 0; wave < batches.size(); wave += spec_.max_in_flight) {
        std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
        std::size_t wave_end = std::min(batches.size(), wave + spec_.max_in_flight);
        for (std::size_t b = wave; b < wave_end; ++b) {
            inflight.push_back(std::async(std::launch::async, [this, &batches, &texts, b, type] {
                std::vector<std::string> batch_texts;
                for (std::size_t idx : batches[b]) batch_texts.push_back(texts[idx]);
                return fetch_batch(batch_texts, type);
            }));
        }
        for (std::size_t b = wave; b < wave_end; ++b) {
            auto vectors = inflight[b - wave].get();
            for (std::size_t k = 0; k < batches[b].size(); ++k) {
                std::size_t idx = batches[b][k];
                if (cache_) cache_->put(spec_.model, type, texts[idx], vectors[k]);
                slots[idx] = std::move(vectors[k]);
            }
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    if (spec.kind == EmbedderKind::Mock) return std::make_unique<MockEmbedder>(spec.dim, spec.seed);
    return std::make_unique<RemoteEmbedder>(spec);
}

}  // namespace aer
