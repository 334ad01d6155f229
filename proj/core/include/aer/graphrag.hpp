#pragma once

// Stage 1: per-topic hybrid document graphs, dense/sparse entry points,
// connected-component retrieval and the topic-wide context cache.

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aer/corpus.hpp"
#include "aer/embed.hpp"
#include "aer/lexindex.hpp"

namespace aer {

struct HybridParams {
    double alpha = 0.7;           // dense weight
    double edge_threshold = 0.4;  // edges kept iff weight >= threshold
    std::size_t k_dense = 3;
    std::size_t k_sparse = 2;

    void validate() const;  // throws std::invalid_argument
};

/// alpha * sim_sem + (1 - alpha) * sim_lex. Throws std::invalid_argument if
/// any input lies outside [0,1].
double hybrid_weight(double sim_sem, double sim_lex, double alpha);

struct GraphEdge {
    std::size_t a = 0;  // a < b, node positions
    std::size_t b = 0;
    double weight = 0.0;
};

/// Undirected weighted similarity graph over one topic's documents.
class DocGraph {
public:
    struct Neighbor {
        std::size_t node;
        double weight;
    };

    DocGraph() = default;
    DocGraph(TopicId topic, std::vector<std::string> node_ids, std::vector<GraphEdge> edges);

    TopicId topic_id() const { return topic_; }
    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<std::string>& node_ids() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    std::span<const Neighbor> neighbors(std::size_t node) const { return adjacency_[node]; }
    std::optional<std::size_t> position(std::string_view id) const;

private:
    TopicId topic_ = 0;
    std::vector<std::string> nodes_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<Neighbor>> adjacency_;
    std::unordered_map<std::string, std::size_t> positions_;
};

/// Everything the retriever needs for one topic.
struct TopicIndex {
    TopicId topic_id = 0;
    std::vector<DocumentRecord> docs;
    LexIndex lex{std::vector<LexIndex::Entry>{}};
    EntitySet entities;
    std::vector<EmbeddingVector> embeddings;  // aligned with docs
    DocGraph graph;
};

/// Text embedded for a document: title and content.
std::string document_embedding_text(const DocumentRecord& doc);

/// Scores all unordered pairs. `embeddings` maps doc id to vector; a
/// missing entry throws EmbeddingError naming the document. Negative
/// cosines are clamped to 0 before blending.
DocGraph build_graph(TopicId topic, std::span<const DocumentRecord> docs,
                     const std::unordered_map<std::string, EmbeddingVector>& embeddings, const LexIndex& index,
                     const EntitySet& entities, const HybridParams& params, const Bm25Params& bm25);

/// Builds the lexical index, entity set, embeddings and graph for a topic.
TopicIndex build_topic_index(TopicId topic, std::vector<DocumentRecord> docs, Embedder& embedder,
                             const HybridParams& params, const Bm25Params& bm25,
                             const EntityRecognizer& recognizer = CapitalizationEntityRecognizer{});

/// Same, with precomputed document embeddings (aligned with `docs`).
TopicIndex assemble_topic_index(TopicId topic, std::vector<DocumentRecord> docs,
                                std::vector<EmbeddingVector> embeddings, const HybridParams& params,
                                const Bm25Params& bm25,
                                const EntityRecognizer& recognizer = CapitalizationEntityRecognizer{});

/// Target event followed by the four options, space-joined.
std::string make_query(const QuestionRecord& q);

struct EntryPoints {
    std::vector<std::string> dense;   // rank order
    std::vector<std::string> sparse;  // rank order, may overlap dense
    /// Deduplicated union: dense first, then sparse-only entries.
    std::vector<std::string> merged() const;
};

/// Top-k_dense by cosine to the query embedding and top-k_sparse by BM25+
/// over the query tokens; ties broken by ascending document id.
EntryPoints entry_points(const EmbeddingVector& query_embedding, std::span<const std::string> query_terms,
                         const TopicIndex& topic, const HybridParams& params, const Bm25Params& bm25);
EntryPoints entry_points(const std::string& query, Embedder& embedder, const TopicIndex& topic,
                         const HybridParams& params, const Bm25Params& bm25);

enum class Provenance { DenseEntry, SparseEntry, Traversal };
const char* to_string(Provenance p);

struct RetrievalResult {
    TopicId topic_id = 0;
    std::string query_text;
    std::vector<std::string> selected;  // entries first, then BFS discovery order
    std::map<std::string, Provenance> provenance;
    std::vector<std::string> excluded;  // graph node order

    bool operator==(const RetrievalResult&) const = default;
};

/// Breadth-first expansion from the entry points over edges whose weight is
/// at least params.edge_threshold. Unknown entry ids are ignored.
RetrievalResult retrieve(const EntryPoints& entries, const DocGraph& graph, const HybridParams& params,
                         std::string query_text = {});

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    double hit_rate() const {
        std::size_t total = hits + misses;
        return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
    }
};

/// Topic-wide retrieval cache. The first request for a topic computes and
/// stores its result; concurrent requests for the same topic wait for that
/// computation instead of repeating it.
class TopicContextCache {
public:
    using Compute = std::function<RetrievalResult()>;

    /// Returns the cached result for `topic`, computing it on first use.
    RetrievalResult get_or_compute(TopicId topic, const Compute& compute);

    /// Union mode: merges a freshly computed result into the topic entry.
    /// Newly selected docs are appended in order and `excluded` is
    /// recomputed against `topic_docs`. Every call counts as a miss.
    RetrievalResult merge(TopicId topic, const RetrievalResult& result, std::span<const std::string> topic_docs);

    std::optional<RetrievalResult> peek(TopicId topic) const;
    CacheStats stats() const;

private:
    struct Slot {
        bool ready = false;
        bool computing = false;
        RetrievalResult value;
    };
    mutable std::mutex mutex_;
    std::condition_variable ready_cv_;
    std::map<TopicId, Slot> slots_;
    CacheStats stats_;
};

std::string graph_to_json(const DocGraph& graph);
DocGraph graph_from_json(std::string_view json_text);
std::string retrieval_to_json(const std::string& question_id, const RetrievalResult& r, bool cache_hit);

}  // namespace aer
