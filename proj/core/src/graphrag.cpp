#include "aer/graphrag.hpp"

#include <algorithm>
#include <deque>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "aer/errors.hpp"

namespace aer {

using json = nlohmann::json;

void HybridParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
    if (!(edge_threshold >= 0.0 && edge_threshold <= 1.0)) {
        throw std::invalid_argument("edge_threshold must lie in [0,1]");
    }
}

double hybrid_weight(double sim_sem, double sim_lex, double alpha) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(sim_sem) || !in_unit(sim_lex) || !in_unit(alpha)) {
        throw std::invalid_argument("hybrid_weight: inputs must lie in [0,1]");
    }
    return alpha * sim_sem + (1.0 - alpha) * sim_lex;
}

DocGraph::DocGraph(TopicId topic, std::vector<std::string> node_ids, std::vector<GraphEdge> edges)
    : topic_(topic), nodes_(std::move(node_ids)), edges_(std::move(edges)), adjacency_(nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!positions_.emplace(nodes_[i], i).second) {
            throw std::invalid_argument("graph: duplicate node id '" + nodes_[i] + "'");
        }
    }
    for (auto& e : edges_) {
        if (e.a == e.b) throw std::invalid_argument("graph: self-edge on '" + nodes_.at(e.a) + "'");
        if (e.a >= nodes_.size() || e.b >= nodes_.size()) throw std::out_of_range("graph: edge endpoint out of range");
        if (e.b < e.a) std::swap(e.a, e.b);
        adjacency_[e.a].push_back({e.b, e.weight});
        adjacency_[e.b].push_back({e.a, e.weight});
    }
}

std::optional<std::size_t> DocGraph::position(std::string_view id) const {
    auto it = positions_.find(std::string(id));
    if (it == positions_.end()) return std::nullopt;
    return it->second;
}

std::string document_embedding_text(const DocumentRecord& doc) {
    if (doc.title.empty()) return doc.content;
    return doc.title + "\n" + doc.content;
}

namespace {

DocGraph build_from_matrices(TopicId topic, std::span<const DocumentRecord> docs,
                             std::span<const EmbeddingVector* const> vectors, const std::vector<double>& lex,
                             const HybridParams& params) {
    std::size_t n = docs.size();
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& d : docs) ids.push_back(d.id);
    std::vector<GraphEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sem = std::clamp(cosine(*vectors[i], *vectors[j]), 0.0, 1.0);
            double w = hybrid_weight(sem, lex[i * n + j], params.alpha);
            if (w >= params.edge_threshold) edges.push_back({i, j, w});
        }
    }
    return DocGraph(topic, std::move(ids), std::move(edges));
}

}  // namespace

DocGraph build_graph(TopicId topic, std::span<const DocumentRecord> docs,
                     const std::unordered_map<std::string, EmbeddingVector>& embeddings, const LexIndex& index,
                     const EntitySet& entities, const HybridParams& params, const Bm25Params& bm25) {
    params.validate();
    std::vector<const EmbeddingVector*> vectors;
    vectors.reserve(docs.size());
    for (const auto& d : docs) {
        auto it = embeddings.find(d.id);
        if (it == embeddings.end()) throw EmbeddingError("build_graph: no embedding for document '" + d.id + "'");
        vectors.push_back(&it->second);
    }
    // The lexical matrix is indexed by LexIndex position; remap to `docs` order.
    std::vector<double> full = lexical_similarity_matrix(index, bm25, entities);
    std::size_t n = docs.size();
    std::size_t m = index.doc_count();
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = index.position(docs[i].id);
    std::vector<double> lex(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) lex[i * n + j] = full[pos[i] * m + pos[j]];
    }
    return build_from_matrices(topic, docs, vectors, lex, params);
}

TopicIndex assemble_topic_index(TopicId topic, std::vector<DocumentRecord> docs,
                                std::vector<EmbeddingVector> embeddings, const HybridParams& params,
                                const Bm25Params& bm25, const EntityRecognizer& recognizer) {
    if (embeddings.size() != docs.size()) {
        throw EmbeddingError("topic " + std::to_string(topic) + ": " + std::to_string(embeddings.size()) +
                             " embeddings for " + std::to_string(docs.size()) + " documents");
    }
    params.validate();
    bm25.validate();
    TopicIndex t;
    t.topic_id = topic;
    t.lex = LexIndex::from_documents(docs);
    t.entities = recognizer.extract(docs);
    std::vector<const EmbeddingVector*> vectors;
    for (const auto& e : embeddings) vectors.push_back(&e);
    t.graph = build_from_matrices(topic, docs, vectors, lexical_similarity_matrix(t.lex, bm25, t.entities), params);
    t.docs = std::move(docs);
    t.embeddings = std::move(embeddings);
    return t;
}

TopicIndex build_topic_index(TopicId topic, std::vector<DocumentRecord> docs, Embedder& embedder,
                             const HybridParams& params, const Bm25Params& bm25, const EntityRecognizer& recognizer) {
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(document_embedding_text(d));
    auto embeddings = texts.empty() ? std::vector<EmbeddingVector>{} : embedder.embed(texts, InputType::Document);
    return assemble_topic_index(topic, std::move(docs), std::move(embeddings), params, bm25, recognizer);
}

std::string make_query(const QuestionRecord& q) {
    std::string out = q.target_event;
    for (Letter l : kAllLetters) {
        out.push_back(' ');
        out += q.option(l);
    }
    return out;
}

std::vector<std::string> EntryPoints::merged() const {
    std::vector<std::string> out = dense;
    for (const auto& id : sparse) {
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

namespace {

std::vector<std::string> top_k(std::vector<std::pair<double, const std::string*>> scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(*scored[i].second);
    return out;
}

}  // namespace

EntryPoints entry_points(const EmbeddingVector& query_embedding, std::span<const std::string> query_terms,
                         const TopicIndex& topic, const HybridParams& params, const Bm25Params& bm25) {
    EntryPoints ep;
    if (topic.docs.empty()) return ep;
    std::vector<std::pair<double, const std::string*>> dense;
    std::vector<std::pair<double, const std::string*>> sparse;
    for (std::size_t i = 0; i < topic.docs.size(); ++i) {
        const auto& id = topic.docs[i].id;
        dense.emplace_back(cosine(query_embedding, topic.embeddings[i]), &id);
        sparse.emplace_back(bm25_plus(query_terms, id, topic.lex, bm25, topic.entities), &id);
    }
    ep.dense = top_k(std::move(dense), params.k_dense);
    ep.sparse = top_k(std::move(sparse), params.k_sparse);
    return ep;
}

EntryPoints entry_points(const std::string& query, Embedder& embedder, const TopicIndex& topic,
                         const HybridParams& params, const Bm25Params& bm25) {
    if (topic.docs.empty()) return {};
    std::vector<std::string> texts{query};
    auto q = embedder.embed(texts, InputType::Query);
    auto terms = tokenize(query);
    return entry_points(q.front(), terms, topic, params, bm25);
}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::DenseEntry: return "dense-entry";
        case Provenance::SparseEntry: return "sparse-entry";
        case Provenance::Traversal: return "traversal";
    }
    return "unknown";
}

RetrievalResult retrieve(const EntryPoints& entries, const DocGraph& graph, const HybridParams& params,
                         std::string query_text) {
    RetrievalResult r;
    r.topic_id = graph.topic_id();
    r.query_text = std::move(query_text);

    std::vector<bool> seen(graph.node_count(), false);
    std::deque<std::size_t> queue;
    auto seed = [&](const std::string& id, Provenance p) {
        auto pos = graph.position(id);
        if (!pos || seen[*pos]) return;
        seen[*pos] = true;
        queue.push_back(*pos);
        r.selected.push_back(id);
        r.provenance.emplace(id, p);
    };
    for (const auto& id : entries.dense) seed(id, Provenance::DenseEntry);
    for (const auto& id : entries.sparse) seed(id, Provenance::SparseEntry);

    while (!queue.empty()) {
        std::size_t node = queue.front();
        queue.pop_front();
        for (const auto& nb : graph.neighbors(node)) {
            if (nb.weight < params.edge_threshold || seen[nb.node]) continue;
            seen[nb.node] = true;
            queue.push_back(nb.node);
            const auto& id = graph.node_ids()[nb.node];
            r.selected.push_back(id);
            r.provenance.emplace(id, Provenance::Traversal);
        }
    }
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        if (!seen[i]) r.excluded.push_back(graph.node_ids()[i]);
    }
    return r;
}

RetrievalResult TopicContextCache::get_or_compute(TopicId topic, const Compute& compute) {
    std::unique_lock lock(mutex_);
    auto& slot = slots_[topic];
    ready_cv_.wait(lock, [&] { return !slot.computing; });
    if (slot.ready) {
        ++stats_.hits;
        return slot.value;
    }
    slot.computing = true;
    ++stats_.misses;
    lock.unlock();
    RetrievalResult value;
    try {
        value = compute();
    } catch (...) {
        lock.lock();
        slot.computing = false;
        --stats_.misses;
        ready_cv_.notify_all();
        throw;
    }
    lock.lock();
    slot.value = value;
    slot.ready = true;
    slot.computing = false;
    ready_cv_.notify_all();
    return value;
}

RetrievalResult TopicContextCache::merge(TopicId topic, const RetrievalResult& result,
                                         std::span<const std::string> topic_docs) {
    std::lock_guard lock(mutex_);
    ++stats_.misses;
    auto& slot = slots_[topic];
    if (!slot.ready) {
        slot.value = result;
        slot.ready = true;
        return slot.value;
    }
    auto& acc = slot.value;
    for (const auto& id : result.selected) {
        if (acc.provenance.contains(id)) continue;
        acc.selected.push_back(id);
        acc.provenance.emplace(id, result.provenance.at(id));
    }
    acc.excluded.clear();
    for (const auto& id : topic_docs) {
        if (!acc.provenance.contains(id)) acc.excluded.push_back(id);
    }
    return acc;
}

std::optional<RetrievalResult> TopicContextCache::peek(TopicId topic) const {
    std::lock_guard lock(mutex_);
    auto it = slots_.find(topic);
    if (it == slots_.end() || !it->second.ready) return std::nullopt;
    return it->second.value;
}

CacheStats TopicContextCache::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

std::string graph_to_json(const DocGraph& graph) {
    json edges = json::array();
    for (const auto& e : graph.edges()) {
        edges.push_back({{"a", graph.node_ids()[e.a]}, {"b", graph.node_ids()[e.b]}, {"w", e.weight}});
    }
    json obj = {{"topic_id", graph.topic_id()}, {"nodes", graph.node_ids()}, {"edges", std::move(edges)}};
    return obj.dump();
}

DocGraph graph_from_json(std::string_view json_text) {
    json obj = json::parse(json_text);
    auto nodes = obj.at("nodes").get<std::vector<std::string>>();
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < nodes.size(); ++i) pos.emplace(nodes[i], i);
    std::vector<GraphEdge> edges;
    for (const auto& e : obj.at("edges")) {
        edges.push_back({pos.at(e.at("a").get<std::string>()), pos.at(e.at("b").get<std::string>()),
                         e.at("w").get<double>()});
    }
    return DocGraph(obj.at("topic_id").get<TopicId>(), std::move(nodes), std::move(edges));
}

std::string retrieval_to_json(const std::string& question_id, const RetrievalResult& r, bool cache_hit) {
    json prov = json::object();
    for (const auto& [id, p] : r.provenance) prov[id] = to_string(p);
    json obj = {{"id", question_id},       {"topic_id", r.topic_id}, {"selected", r.selected},
                {"provenance", prov},      {"excluded", r.excluded}, {"cache_hit", cache_hit},
                {"query", r.query_text}};
    return obj.dump();
}

}  // namespace aer
