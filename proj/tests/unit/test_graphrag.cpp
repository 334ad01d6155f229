#include <doctest.h>

#include <json.hpp>
#include <random>
#include <set>
#include <thread>

#include "aer/errors.hpp"
#include "aer/graphrag.hpp"
#include "oracles/components_oracle.hpp"
#include "support/test_support.hpp"

using namespace aer;

namespace {

DocumentRecord doc(std::string id, std::string title, std::string content) {
    DocumentRecord d;
    d.topic_id = 1;
    d.id = std::move(id);
    d.title = std::move(title);
    d.content = std::move(content);
    return d;
}

EmbeddingVector basis(std::size_t dim, std::size_t axis) {
    std::vector<double> v(dim, 0.0);
    v[axis] = 1.0;
    return EmbeddingVector::normalized(v);
}

std::vector<std::string> ids(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("n" + std::to_string(i));
    return out;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("hybrid_weight") {
    CHECK(hybrid_weight(1.0, 1.0, 0.7) == doctest::Approx(1.0));
    CHECK(hybrid_weight(0.8, 0.5, 0.7) == doctest::Approx(0.71).epsilon(1e-12));
    CHECK(hybrid_weight(0.37, 0.9, 1.0) == 0.37);
    CHECK_THROWS_AS(hybrid_weight(1.2, 0.5, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(hybrid_weight(0.5, 0.5, -0.1), std::invalid_argument);
}

TEST_CASE("edges just below the threshold are dropped") {
    std::vector<DocumentRecord> docs = {doc("a", "", "alpha words"), doc("b", "", "beta terms")};
    std::unordered_map<std::string, EmbeddingVector> emb = {
        {"a", EmbeddingVector::normalized({1.0, 0.0})},
        {"b", EmbeddingVector::normalized({0.39, std::sqrt(1.0 - 0.39 * 0.39)})}};
    auto idx = LexIndex::from_documents(docs);
    HybridParams p;
    p.alpha = 1.0;
    auto g = build_graph(1, docs, emb, idx, {}, p, {});
    CHECK(g.edges().empty());

    p.edge_threshold = 0.39 - 1e-9;
    CHECK(build_graph(1, docs, emb, idx, {}, p, {}).edges().size() == 1);
}

TEST_CASE("eight linked documents and four isolated ones") {
    std::vector<DocumentRecord> docs;
    std::unordered_map<std::string, EmbeddingVector> emb;
    for (int i = 0; i < 8; ++i) {
        std::string id = "c" + std::to_string(i);
        docs.push_back(doc(id, "Flood report", "river levels rose over the levee"));
        emb.emplace(id, basis(6, 0));
    }
    const std::array<const char*, 4> lone = {"chess tournament", "bakery opening", "violin recital", "marathon route"};
    for (int i = 0; i < 4; ++i) {
        std::string id = "s" + std::to_string(i);
        docs.push_back(doc(id, "", lone[static_cast<std::size_t>(i)]));
        emb.emplace(id, basis(6, static_cast<std::size_t>(i + 1)));
    }
    auto idx = LexIndex::from_documents(docs);
    auto g = build_graph(1, docs, emb, idx, {}, {}, {});
    CHECK(g.edges().size() == 28);

    ref::UnionFind uf(g.node_count());
    for (const auto& e : g.edges()) uf.unite(e.a, e.b);
    std::map<std::size_t, int> sizes;
    for (std::size_t v = 0; v < g.node_count(); ++v) ++sizes[uf.find(v)];
    std::multiset<int> shape;
    for (auto [_, s] : sizes) shape.insert(s);
    CHECK(shape == std::multiset<int>{1, 1, 1, 1, 8});
}

TEST_CASE("identical documents are joined with weight one") {
    std::vector<DocumentRecord> docs = {doc("a", "Same", "identical body text"), doc("b", "Same", "identical body text")};
    MockEmbedder e(64, 0);
    std::unordered_map<std::string, EmbeddingVector> emb = {{"a", e.embed_one(document_embedding_text(docs[0]))},
                                                            {"b", e.embed_one(document_embedding_text(docs[1]))}};
    auto g = build_graph(1, docs, emb, LexIndex::from_documents(docs), {}, {}, {});
    REQUIRE(g.edges().size() == 1);
    CHECK(g.edges()[0].weight == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_graph reports a missing embedding") {
    std::vector<DocumentRecord> docs = {doc("a", "", "x"), doc("b", "", "y")};
    std::unordered_map<std::string, EmbeddingVector> emb = {{"a", basis(2, 0)}};
    CHECK_THROWS_AS(build_graph(1, docs, emb, LexIndex::from_documents(docs), {}, {}, {}), EmbeddingError);
}

TEST_CASE("graph construction rejects malformed input") {
    CHECK_THROWS(DocGraph(1, {"a", "a"}, {}));
    CHECK_THROWS(DocGraph(1, {"a", "b"}, {{0, 0, 0.5}}));
    DocGraph g(1, {"a", "b"}, {{1, 0, 0.5}});
    CHECK(g.edges()[0].a == 0);
    CHECK(g.edges()[0].b == 1);
}

TEST_CASE("make_query joins the event and all options") {
    auto q = aer::testing::make_question("q", 1, "E", "a", "b", "c", "d");
    CHECK(make_query(q) == "E a b c d");
    CHECK(make_query(q) == make_query(q));
    auto with_none = aer::testing::make_question("q", 1, "E", "a", "b", "c", aer::testing::kNoneText);
    CHECK(make_query(with_none).find(aer::testing::kNoneText) != std::string::npos);
}

TEST_CASE("a document ranked first by both signals is entered once") {
    std::vector<DocumentRecord> docs = {doc("x", "Zeppelin", "zeppelin hangar fire"), doc("y", "", "harbor crane"),
                                        doc("z", "", "city council vote"), doc("w", "", "school lunch menu")};
    std::vector<EmbeddingVector> emb = {basis(4, 0), basis(4, 1), basis(4, 2), basis(4, 3)};
    auto topic = assemble_topic_index(1, docs, emb, {}, {});
    std::vector<std::string> terms = {"zeppelin", "hangar"};
    auto ep = entry_points(basis(4, 0), terms, topic, {}, {});
    REQUIRE(ep.dense.size() == 3);
    REQUIRE(ep.sparse.size() == 2);
    CHECK(ep.dense[0] == "x");
    CHECK(ep.sparse[0] == "x");
    auto merged = ep.merged();
    CHECK(std::count(merged.begin(), merged.end(), "x") == 1);
    CHECK(merged.size() == as_set(merged).size());
}

TEST_CASE("fewer documents than k returns all of them") {
    std::vector<DocumentRecord> docs = {doc("p", "", "one"), doc("q", "", "two")};
    auto topic = assemble_topic_index(1, docs, {basis(2, 0), basis(2, 1)}, {}, {});
    std::vector<std::string> terms = {"one"};
    auto ep = entry_points(basis(2, 1), terms, topic, {}, {});
    CHECK(ep.dense == std::vector<std::string>{"q", "p"});
    CHECK(ep.sparse.size() == 2);
}

TEST_CASE("entry ties break by document id") {
    std::vector<DocumentRecord> docs = {doc("m", "", "same"), doc("b", "", "same"), doc("k", "", "same")};
    auto topic = assemble_topic_index(1, docs, {basis(2, 0), basis(2, 0), basis(2, 0)}, {}, {});
    std::vector<std::string> terms = {"same"};
    auto ep = entry_points(basis(2, 0), terms, topic, {}, {});
    CHECK(ep.dense == std::vector<std::string>{"b", "k", "m"});
    CHECK(ep.sparse == std::vector<std::string>{"b", "k"});
}

TEST_CASE("six of fourteen documents: five entries and one traversal") {
    auto nodes = ids(14);
    std::vector<GraphEdge> edges = {{0, 5, 0.8}, {6, 7, 0.2}, {8, 9, 0.39}, {1, 10, 0.1}};
    DocGraph g(1, nodes, edges);
    EntryPoints ep{{"n0", "n1", "n2"}, {"n3", "n4"}};
    auto r = retrieve(ep, g, {});
    CHECK(r.selected == std::vector<std::string>{"n0", "n1", "n2", "n3", "n4", "n5"});
    CHECK(r.excluded.size() == 8);
    CHECK(r.provenance.at("n0") == Provenance::DenseEntry);
    CHECK(r.provenance.at("n3") == Provenance::SparseEntry);
    CHECK(r.provenance.at("n5") == Provenance::Traversal);
}

TEST_CASE("an isolated entry selects only itself") {
    DocGraph g(1, ids(4), {{1, 2, 0.9}, {2, 3, 0.9}});
    auto r = retrieve(EntryPoints{{"n0"}, {}}, g, {});
    CHECK(r.selected == std::vector<std::string>{"n0"});
    CHECK(r.excluded == std::vector<std::string>{"n1", "n2", "n3"});
    auto unknown = retrieve(EntryPoints{{"ghost"}, {}}, g, {});
    CHECK(unknown.selected.empty());
}

TEST_CASE("retrieval equals the union of entry components on random graphs") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
        std::size_t n = 1 + rng() % 50;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<GraphEdge> edges;
        std::vector<ref::RawEdge> raw;
        double density = unit(rng) * 0.15;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (unit(rng) < density) {
                    double w = unit(rng);
                    edges.push_back({a, b, w});
                    raw.push_back({a, b, w});
                }
            }
        }
        HybridParams p;
        p.edge_threshold = unit(rng);
        DocGraph g(1, ids(n), edges);
        EntryPoints ep;
        std::vector<std::size_t> entries;
        for (int k = 0; k < 5; ++k) {
            std::size_t e = rng() % n;
            entries.push_back(e);
            (k < 3 ? ep.dense : ep.sparse).push_back("n" + std::to_string(e));
        }
        auto r = retrieve(ep, g, p);
        std::set<std::string> expected;
        for (std::size_t v : ref::component_union(n, raw, p.edge_threshold, entries)) expected.insert("n" + std::to_string(v));
        CHECK(as_set(r.selected) == expected);

        // Partition of the topic.
        auto all = as_set(r.selected);
        for (const auto& x : r.excluded) CHECK(all.insert(x).second);
        CHECK(all.size() == n);

        // Closure: no retained edge leaves the selection.
        for (const auto& e : edges) {
            if (e.weight < p.edge_threshold) continue;
            CHECK(expected.contains(g.node_ids()[e.a]) == expected.contains(g.node_ids()[e.b]));
        }

        // Raising the threshold never grows the selection.
        HybridParams stricter = p;
        stricter.edge_threshold = std::min(1.0, p.edge_threshold + unit(rng) * (1.0 - p.edge_threshold));
        auto smaller = as_set(retrieve(ep, g, stricter).selected);
        CHECK(std::includes(expected.begin(), expected.end(), smaller.begin(), smaller.end()));
    }
}

TEST_CASE("raising the edge threshold never adds edges") {
    MockEmbedder e(32, 1);
    std::vector<DocumentRecord> docs = {doc("a", "Storm", "storm surge flooded the harbor"),
                                        doc("b", "Storm", "the harbor flooded after the storm"),
                                        doc("c", "Vote", "council vote delayed"), doc("d", "Storm", "surge warnings")};
    std::vector<EmbeddingVector> emb;
    for (const auto& d : docs) emb.push_back(e.embed_one(document_embedding_text(d)));
    std::size_t previous = SIZE_MAX;
    for (double t : {0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0}) {
        HybridParams p;
        p.edge_threshold = t;
        auto topic = assemble_topic_index(1, docs, emb, p, {});
        CHECK(topic.graph.edges().size() <= previous);
        previous = topic.graph.edges().size();
    }
}

TEST_CASE("topic cache arithmetic: 400 questions over 36 topics") {
    TopicContextCache cache;
    std::vector<int> per_topic(36, 1);
    for (int extra = 0; extra < 400 - 36; ++extra) ++per_topic[static_cast<std::size_t>(extra % 36)];
    int computed = 0;
    for (std::size_t t = 0; t < per_topic.size(); ++t) {
        for (int q = 0; q < per_topic[t]; ++q) {
            cache.get_or_compute(static_cast<TopicId>(t), [&] {
                ++computed;
                RetrievalResult r;
                r.topic_id = static_cast<TopicId>(t);
                return r;
            });
        }
    }
    CHECK(computed == 36);
    CHECK(cache.stats().hits == 364);
    CHECK(cache.stats().misses == 36);
    CHECK(cache.stats().hit_rate() == doctest::Approx(0.91).epsilon(1e-15));
}

TEST_CASE("a single-question topic never hits") {
    TopicContextCache cache;
    cache.get_or_compute(7, [] { return RetrievalResult{}; });
    CHECK(cache.stats().hits == 0);
    CHECK(cache.stats().hit_rate() == 0.0);
}

TEST_CASE("the second request for a topic returns the cached documents") {
    TopicContextCache cache;
    RetrievalResult first;
    first.selected = {"a", "b"};
    auto r1 = cache.get_or_compute(3, [&] { return first; });
    auto r2 = cache.get_or_compute(3, [] {
        RetrievalResult other;
        other.selected = {"z"};
        return other;
    });
    CHECK(r1 == r2);
    CHECK(r2.selected == std::vector<std::string>{"a", "b"});
    CHECK(cache.peek(3).has_value());
    CHECK_FALSE(cache.peek(4).has_value());
}

TEST_CASE("concurrent requests compute each topic exactly once") {
    TopicContextCache cache;
    std::atomic<int> computed{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < 8; ++w) {
        pool.emplace_back([&, w] {
            for (int i = 0; i < 50; ++i) {
                TopicId t = (i + w) % 5;
                cache.get_or_compute(t, [&] {
                    ++computed;
                    std::this_thread::sleep_for(std::chrono::microseconds(200));
                    return RetrievalResult{};
                });
            }
        });
    }
    for (auto& t : pool) t.join();
    CHECK(computed.load() == 5);
    CHECK(cache.stats().misses == 5);
    CHECK(cache.stats().hits == 395);
}

TEST_CASE("a failed computation can be retried") {
    TopicContextCache cache;
    CHECK_THROWS(cache.get_or_compute(1, []() -> RetrievalResult { throw std::runtime_error("boom"); }));
    auto r = cache.get_or_compute(1, [] {
        RetrievalResult ok;
        ok.selected = {"x"};
        return ok;
    });
    CHECK(r.selected == std::vector<std::string>{"x"});
    CHECK(cache.stats().misses == 1);
}

TEST_CASE("union mode grows the topic context") {
    TopicContextCache cache;
    std::vector<std::string> topic_docs = {"a", "b", "c", "d"};
    RetrievalResult r1;
    r1.selected = {"b"};
    r1.provenance = {{"b", Provenance::DenseEntry}};
    RetrievalResult r2;
    r2.selected = {"d", "b"};
    r2.provenance = {{"d", Provenance::SparseEntry}, {"b", Provenance::DenseEntry}};
    cache.merge(9, r1, topic_docs);
    auto merged = cache.merge(9, r2, topic_docs);
    CHECK(merged.selected == std::vector<std::string>{"b", "d"});
    CHECK(merged.excluded == std::vector<std::string>{"a", "c"});
    CHECK(cache.stats().misses == 2);
    CHECK(cache.stats().hits == 0);
}

TEST_CASE("graph and retrieval JSON") {
    DocGraph g(4, {"a", "b", "c"}, {{0, 2, 0.5}});
    auto back = graph_from_json(graph_to_json(g));
    CHECK(back.node_ids() == g.node_ids());
    REQUIRE(back.edges().size() == 1);
    CHECK(back.edges()[0].weight == 0.5);
    CHECK(back.topic_id() == 4);

    auto r = retrieve(EntryPoints{{"a"}, {}}, g, {}, "query");
    auto j = nlohmann::json::parse(retrieval_to_json("q1", r, true));
    CHECK(j["id"] == "q1");
    CHECK(j["topic_id"] == 4);
    CHECK(j["selected"] == nlohmann::json::array({"a", "c"}));
    CHECK(j["provenance"]["c"] == "traversal");
    CHECK(j["excluded"] == nlohmann::json::array({"b"}));
    CHECK(j["cache_hit"] == true);
}
