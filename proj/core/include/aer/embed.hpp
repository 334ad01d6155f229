#pragma once

// Dense embeddings: a uniform embedder interface, cosine similarity, a
// deterministic hashed-trigram mock, and an HTTP client with a disk cache.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aer {

/// Unit-norm dense vector. Construct through `normalized`.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Scales `values` to unit L2 norm. Throws EmbeddingError on an empty or
    /// all-zero input.
    static EmbeddingVector normalized(std::vector<double> values);

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

/// Inner product of two unit vectors. Throws EmbeddingError on dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

enum class EmbedderKind { Mock, Remote };

struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::Mock;
    std::size_t dim = 256;
    std::uint64_t seed = 0;

    // remote
    std::string endpoint;       // e.g. "http://localhost:8080/embed"
    std::string model;
    std::string token_env;      // name of the environment variable holding the API token
    std::string query_input_type = "search_document";
    std::string document_input_type = "search_document";
    std::size_t batch_size = 32;
    int max_attempts = 4;
    int backoff_initial_ms = 200;
    int backoff_max_ms = 5000;
    std::size_t max_in_flight = 4;
    std::filesystem::path cache_dir;  // empty disables the on-disk cache
    int timeout_seconds = 60;
};

enum class InputType { Query, Document };

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One unit vector per input, in input order.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                               InputType type = InputType::Document) = 0;
    virtual std::size_t dim() const = 0;
};

/// Hashed character-trigram counts projected through a seed-derived
/// pseudorandom matrix, then normalized. Bit-identical across platforms.
class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                       InputType type = InputType::Document) override;
    EmbeddingVector embed_one(std::string_view text) const;
    std::size_t dim() const override { return dim_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Content-addressed vector cache: one file per (model, sha256(text)).
/// Reads are lock-free; writes go through a temp file and an atomic rename.
class VectorCache {
public:
    explicit VectorCache(std::filesystem::path root);
    std::optional<EmbeddingVector> get(const std::string& model, InputType type, const std::string& text) const;
    void put(const std::string& model, InputType type, const std::string& text, const EmbeddingVector& v);

private:
    std::filesystem::path path_for(const std::string& model, InputType type, const std::string& text) const;
    std::filesystem::path root_;
    mutable std::mutex write_mutex_;
};

/// HTTP JSON client: POST {texts, model, input_type} -> {vectors}.
/// Batches requests, bounds concurrent calls, retries with exponential
/// backoff and consults the vector cache first.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(EmbedderSpec spec);
    ~RemoteEmbedder() override;

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                       InputType type = InputType::Document) override;
    std::size_t dim() const override { return spec_.dim; }

    /// Number of HTTP requests issued so far (including retries).
    std::size_t requests_sent() const;

private:
    std::vector<EmbeddingVector> fetch_batch(std::span<const std::string> texts, InputType type);

    EmbedderSpec spec_;
    std::string token_;
    std::unique_ptr<VectorCache> cache_;
    struct Counters;
    std::unique_ptr<Counters> counters_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

}  // namespace aer
