#include <doctest.h>

#include <random>

#include "aer/errors.hpp"
#include "aer/lexindex.hpp"
#include "oracles/bm25_oracle.hpp"

using namespace aer;

namespace {

DocumentRecord doc(std::string id, std::string content, std::string title = "") {
    DocumentRecord d;
    d.topic_id = 1;
    d.id = std::move(id);
    d.title = std::move(title);
    d.content = std::move(content);
    return d;
}

LexIndex index_of(const ref::ToyCorpus& c) {
    std::vector<LexIndex::Entry> entries;
    for (std::size_t i = 0; i < c.docs.size(); ++i) entries.push_back({"d" + std::to_string(i), c.docs[i]});
    return LexIndex(std::move(entries));
}

EntitySet entity_set(const ref::ToyCorpus& c) { return {c.entities.begin(), c.entities.end()}; }

ref::ToyCorpus random_corpus(std::mt19937& rng, std::size_t docs) {
    static const std::vector<std::string> vocab = {"tariff", "ontario", "steel", "price", "rose",  "fell",
                                                   "trade",  "canada",  "war",   "tax",   "market", "vote"};
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1), len(1, 25);
    ref::ToyCorpus c;
    for (std::size_t d = 0; d < docs; ++d) {
        std::vector<std::string> tokens;
        for (std::size_t n = len(rng); n > 0; --n) tokens.push_back(vocab[word(rng)]);
        c.docs.push_back(std::move(tokens));
    }
    for (const auto& w : vocab) {
        if (word(rng) % 3 == 0) c.entities.insert(w);
    }
    return c;
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Trump placed 25% tariffs") == std::vector<std::string>{"trump", "placed", "25", "tariffs"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Caf\xC3\xA9 au-lait") == std::vector<std::string>{"caf\xC3\xA9", "au", "lait"});
}

TEST_CASE("tokenize is stable on re-joined tokens") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> ch(32, 126), len(0, 60);
    for (int i = 0; i < 300; ++i) {
        std::string s;
        for (int n = len(rng); n > 0; --n) s += static_cast<char>(ch(rng));
        auto tokens = tokenize(s);
        std::string joined;
        for (const auto& t : tokens) joined += t + " ";
        CHECK(tokenize(joined) == tokens);
    }
}

TEST_CASE("capitalization entities") {
    std::vector<DocumentRecord> docs = {doc("a", "Ontario placed a tax. The tax hurt Ontario.")};
    CHECK(extract_entities(docs) == EntitySet{"ontario"});

    std::vector<DocumentRecord> lower = {doc("a", "prices went up and stayed up.")};
    CHECK(extract_entities(lower).empty());

    std::vector<DocumentRecord> initial = {doc("a", "The market fell. The index rose.")};
    CHECK(extract_entities(initial).empty());

    std::vector<DocumentRecord> stop = {doc("a", "Prices rose and The rest followed.")};
    CHECK(extract_entities(stop).empty());
}

TEST_CASE("bm25_plus on an empty query is zero") {
    ref::ToyCorpus c{{{"a", "b"}, {"c"}}, {}};
    auto idx = index_of(c);
    CHECK(bm25_plus({}, "d0", idx, {}, {}) == 0.0);
    CHECK_THROWS_AS(bm25_plus({}, "nope", idx, {}, {}), IndexMismatchError);
}

TEST_CASE("bm25_plus matches direct evaluation on a 3-document corpus") {
    ref::ToyCorpus c{{{"steel", "tariff", "steel", "canada"}, {"tariff", "war"}, {"market", "rose", "rose"}}, {}};
    auto idx = index_of(c);
    Bm25Params p;
    for (const std::string term : {"steel", "tariff", "rose", "absent"}) {
        std::vector<std::string> q = {term};
        for (std::size_t d = 0; d < 3; ++d) {
            double expected = ref::bm25(c, q, d, {});
            CHECK(bm25_plus(q, "d" + std::to_string(d), idx, p, {}) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("entity boost triples a term's contribution") {
    ref::ToyCorpus c{{{"ontario", "tax", "ontario"}, {"tax", "rose"}, {"market"}}, {}};
    auto idx = index_of(c);
    std::vector<std::string> q = {"ontario"};
    double plain = bm25_plus(q, "d0", idx, {}, {});
    double boosted = bm25_plus(q, "d0", idx, {}, EntitySet{"ontario"});
    CHECK(boosted / plain == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("bm25_plus equals the loop oracle on random corpora") {
    std::mt19937 rng(5);
    Bm25Params p{1.2, 0.6, 0.5, 3.0};
    ref::Bm25Setting s{1.2, 0.6, 0.5, 3.0};
    for (int round = 0; round < 30; ++round) {
        auto c = random_corpus(rng, 1 + rng() % 10);
        auto idx = index_of(c);
        auto ents = entity_set(c);
        for (int qi = 0; qi < 5; ++qi) {
            auto q = random_corpus(rng, 1).docs[0];
            q.push_back("unseen");
            for (std::size_t d = 0; d < c.docs.size(); ++d) {
                double expected = ref::bm25(c, q, d, s);
                double got = bm25_plus(q, idx.doc_id(d), idx, p, ents);
                CHECK(got >= 0.0);
                CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
            }
        }
    }
}

TEST_CASE("growing the entity set never lowers a score") {
    std::mt19937 rng(17);
    for (int round = 0; round < 30; ++round) {
        auto c = random_corpus(rng, 6);
        auto idx = index_of(c);
        EntitySet small = entity_set(c);
        auto q = random_corpus(rng, 1).docs[0];
        EntitySet large = small;
        large.insert(q.front());
        for (std::size_t d = 0; d < c.docs.size(); ++d) {
            CHECK(bm25_plus(q, idx.doc_id(d), idx, {}, large) >= bm25_plus(q, idx.doc_id(d), idx, {}, small));
        }
    }
}

TEST_CASE("lexical similarity basics") {
    ref::ToyCorpus c{{{"steel", "tariff", "canada"}, {"market", "vote", "rose"}, {"steel", "war"}}, {}};
    auto idx = index_of(c);
    CHECK(lexical_similarity("d0", "d0", idx, {}, {}) == 1.0);
    CHECK(lexical_similarity("d0", "d1", idx, {}, {}) == 0.0);
    double s02 = lexical_similarity("d0", "d2", idx, {}, {});
    CHECK(s02 > 0.0);
    CHECK(s02 < 1.0);
    CHECK(s02 == doctest::Approx(ref::lexical_similarity(c, 0, 2, {})).epsilon(1e-12));
}

TEST_CASE("lexical similarity is symmetric, bounded and matches the oracle") {
    std::mt19937 rng(23);
    for (int round = 0; round < 20; ++round) {
        auto c = random_corpus(rng, 2 + rng() % 7);
        auto idx = index_of(c);
        auto ents = entity_set(c);
        auto matrix = lexical_similarity_matrix(idx, {}, ents);
        std::size_t n = c.docs.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double ij = lexical_similarity(idx.doc_id(i), idx.doc_id(j), idx, {}, ents);
                double ji = lexical_similarity(idx.doc_id(j), idx.doc_id(i), idx, {}, ents);
                CHECK(ij == ji);
                CHECK(ij >= 0.0);
                CHECK(ij <= 1.0);
                CHECK(matrix[i * n + j] == doctest::Approx(ij).epsilon(1e-12));
                if (i != j) CHECK(ij == doctest::Approx(ref::lexical_similarity(c, i, j, {})).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("top terms rank by tf-idf and break ties by term") {
    ref::ToyCorpus c{{{"b", "a", "a", "c"}, {"c"}}, {}};
    auto idx = index_of(c);
    CHECK(top_terms(0, idx) == ref::top_terms(c, 0));
    CHECK(top_terms(0, idx, 1) == std::vector<std::string>{"a"});
}

TEST_CASE("index statistics and parameter validation") {
    std::vector<DocumentRecord> docs = {doc("x", "Steel rose", "Tariffs"), doc("y", "steel fell")};
    auto idx = LexIndex::from_documents(docs);
    CHECK(idx.doc_count() == 2);
    CHECK(idx.df("steel") == 2);
    CHECK(idx.tf(0, "tariffs") == 1);
    CHECK(idx.avgdl() == doctest::Approx(2.5));
    CHECK_THROWS(LexIndex({{"a", {}}, {"a", {}}}));
    CHECK_THROWS(Bm25Params{1.5, 1.5, 1.0, 3.0}.validate());
    CHECK_THROWS(Bm25Params{1.5, 0.75, 1.0, 0.5}.validate());
}
