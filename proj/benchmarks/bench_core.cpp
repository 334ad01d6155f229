#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "aer/consist.hpp"
#include "aer/embed.hpp"
#include "aer/eval.hpp"
#include "aer/graphrag.hpp"
#include "aer/lexindex.hpp"
#include "aer/reason.hpp"

using namespace aer;

namespace {

const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> w;
        for (int i = 0; i < 400; ++i) w.push_back("term" + std::to_string(i));
        return w;
    }();
    return words;
}

std::string random_text(std::mt19937_64& rng, std::size_t words) {
    const auto& vocab = vocabulary();
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng() % vocab.size()];
    }
    return out;
}

std::vector<DocumentRecord> random_docs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<DocumentRecord> docs;
    for (std::size_t i = 0; i < n; ++i) {
        DocumentRecord d;
        d.topic_id = 1;
        d.id = "d" + std::to_string(i);
        d.title = random_text(rng, 6);
        d.content = random_text(rng, 120);
        docs.push_back(std::move(d));
    }
    return docs;
}

void BM_Bm25Score(benchmark::State& state) {
    auto docs = random_docs(static_cast<std::size_t>(state.range(0)), 1);
    auto index = LexIndex::from_documents(docs);
    auto entities = extract_entities(docs);
    std::mt19937_64 rng(2);
    auto query = tokenize(random_text(rng, 30));
    Bm25Params params;
    for (auto _ : state) {
        double total = 0.0;
        for (std::size_t d = 0; d < index.doc_count(); ++d) total += bm25_plus_at(query, d, index, params, entities);
        benchmark::DoNotOptimize(total);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Score)->Arg(16)->Arg(64)->Arg(256);

void BM_BuildTopicIndex(benchmark::State& state) {
    auto docs = random_docs(static_cast<std::size_t>(state.range(0)), 3);
    MockEmbedder embedder(128, 0);
    std::vector<std::string> texts;
    for (const auto& d : docs) texts.push_back(document_embedding_text(d));
    auto embeddings = embedder.embed(texts);
    for (auto _ : state) {
        auto topic = assemble_topic_index(1, docs, embeddings, HybridParams{}, Bm25Params{});
        benchmark::DoNotOptimize(topic.graph.edges().size());
    }
}
BENCHMARK(BM_BuildTopicIndex)->Arg(16)->Arg(64)->Arg(128);

void BM_Retrieve(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::string> ids;
    for (std::size_t v = 0; v < n; ++v) ids.push_back("n" + std::to_string(v));
    std::vector<GraphEdge> edges;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (unit(rng) < 0.1) edges.push_back({a, b, unit(rng)});
        }
    }
    DocGraph graph(1, ids, edges);
    EntryPoints ep{{ids[0], ids[n / 2], ids[n - 1]}, {ids[1], ids[n / 3]}};
    HybridParams params;
    for (auto _ : state) benchmark::DoNotOptimize(retrieve(ep, graph, params).selected.size());
}
BENCHMARK(BM_Retrieve)->Arg(50)->Arg(500);

// Sibling groups that share option texts, so the rules have work to do.
std::pair<std::vector<QuestionRecord>, std::vector<LetterSet>> sibling_groups(std::size_t groups) {
    std::mt19937_64 rng(5);
    std::vector<QuestionRecord> questions;
    std::vector<LetterSet> preds;
    for (std::size_t g = 0; g < groups; ++g) {
        for (int s = 0; s < 4; ++s) {
            QuestionRecord q;
            q.topic_id = static_cast<TopicId>(g % 36);
            q.id = "g" + std::to_string(g) + "-" + std::to_string(s);
            q.target_event = "Event " + std::to_string(g);
            for (auto& opt : q.options) opt = "Cause " + std::to_string(g) + "-" + std::to_string(rng() % 6);
            if (rng() % 3 == 0) q.options[3] = "None of the others are correct causes.";
            questions.push_back(std::move(q));
            preds.push_back(LetterSet::from_mask(static_cast<std::uint8_t>(1 + rng() % 15)));
        }
    }
    return {questions, preds};
}

void BM_FixedPoint(benchmark::State& state) {
    auto [questions, preds] = sibling_groups(static_cast<std::size_t>(state.range(0)));
    CorpusFacts facts(questions);
    for (auto _ : state) {
        auto r = run_to_fixed_point(PredictionState(preds), facts);
        benchmark::DoNotOptimize(r.report.changes.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(questions.size()));
}
BENCHMARK(BM_FixedPoint)->Arg(100)->Arg(1000);

RatingTable random_table(std::size_t raters, std::size_t items) {
    std::mt19937_64 rng(6);
    RatingTable t(raters, std::vector<std::optional<LetterSet>>(items));
    for (auto& row : t) {
        for (auto& x : row) x = LetterSet::from_mask(static_cast<std::uint8_t>(1 + rng() % 15));
    }
    return t;
}

void BM_FleissKappa(benchmark::State& state) {
    auto t = random_table(5, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fleiss_kappa(t));
}
BENCHMARK(BM_FleissKappa)->Arg(400)->Arg(4000);

void BM_KrippendorffJaccard(benchmark::State& state) {
    auto t = random_table(5, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha(t, SetDistance::Jaccard));
}
BENCHMARK(BM_KrippendorffJaccard)->Arg(400)->Arg(4000);

void BM_Aggregate(benchmark::State& state) {
    std::vector<VoteTally> tallies;
    for (int m = 0; m < 256; ++m) tallies.push_back(VoteTally{{m & 3, (m >> 2) & 3, (m >> 4) & 3, (m >> 6) & 3}, 3});
    for (auto _ : state) {
        for (const auto& t : tallies) benchmark::DoNotOptimize(aggregate(t, LetterSet{Letter::D}, 0.5));
    }
}
BENCHMARK(BM_Aggregate);

}  // namespace

BENCHMARK_MAIN();
