#include "aer/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "aer/consist.hpp"
#include "aer/corpus.hpp"
#include "aer/errors.hpp"
#include "aer/eval.hpp"
#include "aer/graphrag.hpp"
#include "aer/hashing.hpp"
#include "aer/reason.hpp"

namespace aer {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError(path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::string text = read_text(path);
    std::vector<json> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw IngestError(path.string(), n, e.what());
        }
    }
    return rows;
}

fs::path out_path(const RunConfig& cfg, const char* name) { return cfg.out_dir / name; }

// Records inputs/outputs by file name and content hash.
class Manifest {
public:
    Manifest(const RunConfig& cfg, std::string stage) : cfg_(cfg), summary_{std::move(stage), {}, {}} {}

    void input(const fs::path& path) { inputs_[path.filename().string()] = sha256_file(path); }
    void output(const char* name, const std::string& content) {
        write_text(out_path(cfg_, name), content);
        outputs_[name] = sha256_hex(content);
        summary_.outputs.emplace_back(name);
    }
    void count(const std::string& key, double value) { summary_.counts[key] = value; }

    StageSummary finish() {
        json counts = json::object();
        for (const auto& [k, v] : summary_.counts) counts[k] = v;
        json obj = {{"stage", summary_.stage},
                    {"config_hash", config_hash(cfg_)},
                    {"inputs", inputs_},
                    {"outputs", outputs_},
                    {"counts", counts}};
        write_text(out_path(cfg_, (summary_.stage + ".manifest.json").c_str()), obj.dump(2) + "\n");
        spdlog::info("{}: wrote {} file(s)", summary_.stage, summary_.outputs.size());
        return summary_;
    }

private:
    const RunConfig& cfg_;
    StageSummary summary_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

std::vector<QuestionRecord> staged_questions(const RunConfig& cfg, Manifest& m) {
    auto path = out_path(cfg, artifact::kQuestions);
    if (!fs::exists(path)) throw MissingArtifactError(path.string());
    auto qs = load_questions(path);
    m.input(path);
    return qs;
}

DocCorpus staged_docs(const RunConfig& cfg, Manifest& m) {
    auto path = out_path(cfg, artifact::kDocs);
    if (!fs::exists(path)) throw MissingArtifactError(path.string());
    auto docs = load_docs(path);
    m.input(path);
    return docs;
}

std::unique_ptr<Embedder> owned_embedder(const RunConfig& cfg, Embedder*& embedder) {
    if (embedder) return nullptr;
    EmbedderSpec spec = cfg.embedder;
    spec.seed = cfg.seed;
    auto owned = make_embedder(spec);
    embedder = owned.get();
    return owned;
}

}  // namespace

StageSummary run_ingest(const RunConfig& cfg) {
    if (cfg.questions.empty()) throw ConfigError("ingest: no questions file given (--questions)");
    if (cfg.docs.empty()) throw ConfigError("ingest: no docs file given (--docs)");
    if (!fs::exists(cfg.questions)) throw MissingArtifactError(cfg.questions.string());
    if (!fs::exists(cfg.docs)) throw MissingArtifactError(cfg.docs.string());
    Manifest m(cfg, "ingest");
    auto questions = load_questions(cfg.questions);
    auto docs = load_docs(cfg.docs);
    m.input(cfg.questions);
    m.input(cfg.docs);

    for (const auto& q : questions) {
        if (!docs.topics.contains(q.topic_id)) spdlog::warn("ingest: question {} has no documents for topic {}", q.id, q.topic_id);
    }

    CorpusFacts facts(questions);
    json groups = json::array();
    for (const auto& g : facts.groups()) {
        groups.push_back({{"topic_id", g.topic_id}, {"event", g.target_event_key.str()}, {"questions", g.question_ids}});
    }
    json per_question = json::array();
    std::size_t with_none = 0, with_duplicates = 0;
    for (std::size_t i = 0; i < facts.questions().size(); ++i) {
        const auto& f = facts.facts(i);
        json classes = json::array();
        for (LetterSet c : f.duplicate_classes) {
            if (c.size() > 1) classes.push_back(c.to_string());
        }
        with_none += f.none_letters.empty() ? 0 : 1;
        with_duplicates += classes.empty() ? 0 : 1;
        per_question.push_back({{"id", facts.questions()[i].id},
                                {"group", f.group_index},
                                {"none", f.none_letters.to_string()},
                                {"duplicates", classes}});
    }
    json rejected = json::array();
    for (const auto& r : docs.rejected) {
        rejected.push_back({{"topic_id", r.topic_id}, {"id", r.id}, {"line", r.line}, {"reason", r.reason}});
    }
    json facts_json = {{"questions", per_question},
                       {"groups", groups},
                       {"multi_question_group_share", facts.multi_question_group_share()},
                       {"rejected_documents", rejected}};

    m.output(artifact::kQuestions, questions_to_jsonl(questions));
    m.output(artifact::kDocs, docs_to_jsonl(docs));
    m.output(artifact::kCorpusFacts, facts_json.dump(2) + "\n");
    m.count("questions", static_cast<double>(questions.size()));
    m.count("topics", static_cast<double>(docs.topics.size()));
    m.count("documents", static_cast<double>(docs.document_count()));
    m.count("rejected_documents", static_cast<double>(docs.rejected.size()));
    m.count("sibling_groups", static_cast<double>(facts.groups().size()));
    m.count("questions_with_none_option", static_cast<double>(with_none));
    m.count("questions_with_duplicates", static_cast<double>(with_duplicates));
    return m.finish();
}

StageSummary run_build_graph(const RunConfig& cfg, Embedder* embedder) {
    cfg.validate();
    Manifest m(cfg, "build-graph");
    auto corpus = staged_docs(cfg, m);
    auto owned = owned_embedder(cfg, embedder);

    std::string embeddings_out;
    std::string graphs_out;
    std::size_t edges = 0;
    for (auto& [topic, docs] : corpus.topics) {
        auto index = build_topic_index(topic, docs, *embedder, cfg.hybrid, cfg.bm25);
        for (std::size_t i = 0; i < index.docs.size(); ++i) {
            auto values = index.embeddings[i].values();
            json row = {{"topic_id", topic},
                        {"id", index.docs[i].id},
                        {"vector", std::vector<double>(values.begin(), values.end())}};
            embeddings_out += row.dump() + "\n";
        }
        graphs_out += graph_to_json(index.graph) + "\n";
        edges += index.graph.edges().size();
    }
    m.output(artifact::kEmbeddings, embeddings_out);
    m.output(artifact::kGraphs, graphs_out);
    m.count("topics", static_cast<double>(corpus.topics.size()));
    m.count("documents", static_cast<double>(corpus.document_count()));
    m.count("edges", static_cast<double>(edges));
    return m.finish();
}

namespace {

std::map<TopicId, TopicIndex> load_topic_indexes(const RunConfig& cfg, Manifest& m, const DocCorpus& corpus) {
    auto emb_path = out_path(cfg, artifact::kEmbeddings);
    auto graph_path = out_path(cfg, artifact::kGraphs);
    std::map<std::string, EmbeddingVector> vectors;
    for (const auto& row : read_jsonl(emb_path)) {
        vectors.emplace(row.at("id").get<std::string>(),
                        EmbeddingVector::normalized(row.at("vector").get<std::vector<double>>()));
    }
    std::map<TopicId, DocGraph> graphs;
    for (const auto& row : read_jsonl(graph_path)) {
        DocGraph g = graph_from_json(row.dump());
        graphs.emplace(g.topic_id(), std::move(g));
    }
    m.input(emb_path);
    m.input(graph_path);

    std::map<TopicId, TopicIndex> out;
    for (const auto& [topic, docs] : corpus.topics) {
        std::vector<EmbeddingVector> embs;
        for (const auto& d : docs) {
            auto it = vectors.find(d.id);
            if (it == vectors.end()) throw EmbeddingError("retrieve: no stored embedding for document '" + d.id + "'");
            embs.push_back(it->second);
        }
        TopicIndex t;
        t.topic_id = topic;
        t.docs = docs;
        t.lex = LexIndex::from_documents(docs);
        t.entities = extract_entities(docs);
        t.embeddings = std::move(embs);
        auto g = graphs.find(topic);
        if (g == graphs.end()) throw MissingArtifactError(graph_path.string() + " (topic " + std::to_string(topic) + ")");
        t.graph = std::move(g->second);
        out.emplace(topic, std::move(t));
    }
    return out;
}

}  // namespace

StageSummary run_retrieve(const RunConfig& cfg, Embedder* embedder) {
    cfg.validate();
    Manifest m(cfg, "retrieve");
    auto questions = staged_questions(cfg, m);
    auto corpus = staged_docs(cfg, m);
    auto indexes = load_topic_indexes(cfg, m, corpus);
    auto owned = owned_embedder(cfg, embedder);

    TopicContextCache cache;
    std::string out;
    double selected_total = 0.0;
    std::size_t no_context = 0;
    for (const auto& q : questions) {
        auto it = indexes.find(q.topic_id);
        if (it == indexes.end() || it->second.docs.empty()) {
            ++no_context;
            RetrievalResult empty;
            empty.topic_id = q.topic_id;
            empty.query_text = make_query(q);
            out += retrieval_to_json(q.id, empty, false) + "\n";
            continue;
        }
        const TopicIndex& index = it->second;
        auto compute = [&] {
            std::string query = make_query(q);
            auto entries = entry_points(query, *embedder, index, cfg.hybrid, cfg.bm25);
            return retrieve(entries, index.graph, cfg.hybrid, query);
        };
        RetrievalResult r;
        bool hit = false;
        if (cfg.topic_union) {
            std::vector<std::string> ids = index.graph.node_ids();
            r = cache.merge(q.topic_id, compute(), ids);
        } else {
            std::size_t hits_before = cache.stats().hits;
            r = cache.get_or_compute(q.topic_id, compute);
            hit = cache.stats().hits > hits_before;
        }
        selected_total += static_cast<double>(r.selected.size());
        out += retrieval_to_json(q.id, r, hit) + "\n";
    }
    auto stats = cache.stats();
    m.output(artifact::kRetrieval, out);
    m.count("questions", static_cast<double>(questions.size()));
    m.count("cache_hits", static_cast<double>(stats.hits));
    m.count("cache_misses", static_cast<double>(stats.misses));
    m.count("cache_hit_rate", stats.hit_rate());
    m.count("questions_without_context", static_cast<double>(no_context));
    m.count("mean_selected", questions.empty() ? 0.0 : selected_total / static_cast<double>(questions.size()));
    return m.finish();
}

StageSummary run_infer(const RunConfig& cfg, LlmClient* client) {
    cfg.validate();
    Manifest m(cfg, "infer");
    auto questions = staged_questions(cfg, m);
    auto corpus = staged_docs(cfg, m);
    auto retrieval_path = out_path(cfg, artifact::kRetrieval);
    std::map<std::string, std::vector<std::string>> selected;
    for (const auto& row : read_jsonl(retrieval_path)) {
        selected[row.at("id").get<std::string>()] = row.at("selected").get<std::vector<std::string>>();
    }
    m.input(retrieval_path);

    std::unique_ptr<LlmClient> owned;
    if (!client) {
        owned = make_llm_client(cfg.llm);
        client = owned.get();
    }

    struct Outcome {
        std::string prompt_hash;
        std::size_t doc_count = 0;
        std::vector<ParsedPrediction> samples;
        VoteTally votes;
        LetterSet prediction;
    };
    std::vector<Outcome> outcomes(questions.size());
    std::vector<std::exception_ptr> failures(questions.size());

    auto work = [&](std::size_t i) {
        const auto& q = questions[i];
        auto it = selected.find(q.id);
        if (it == selected.end()) throw Error("infer: no retrieval record for question '" + q.id + "'");
        std::map<std::string, const DocumentRecord*> by_id;
        for (const auto& d : corpus.docs(q.topic_id)) by_id.emplace(d.id, &d);
        std::vector<DocumentRecord> context;
        for (const auto& id : it->second) {
            auto d = by_id.find(id);
            if (d == by_id.end()) throw IndexMismatchError("infer: retrieved document '" + id + "' is not in the corpus");
            context.push_back(*d->second);
        }
        Outcome& o = outcomes[i];
        if (context.empty()) {
            spdlog::warn("infer: question {} has no context documents; recording invalid samples", q.id);
            for (int s = 0; s < cfg.sampling.k; ++s) {
                ParsedPrediction p;
                p.attempts = 0;
                p.error = "no context documents";
                o.samples.push_back(std::move(p));
            }
        } else {
            RenderedPrompt prompt = render_prompt(q, context);
            o.prompt_hash = prompt_hash(prompt);
            o.doc_count = prompt.doc_count;
            o.samples = sample_question(q, prompt, *client, cfg.sampling);
        }
        o.votes = tally(o.samples);
        o.prediction = aggregate(o.votes, q, cfg.aggregation.theta);
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) {
            try {
                work(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    std::size_t n_threads = std::min(cfg.workers, std::max<std::size_t>(questions.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    std::string prompts_out, samples_out, raw_out;
    std::size_t invalid = 0, transport = 0, requests = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        const auto& o = outcomes[i];
        prompts_out += json{{"id", q.id}, {"prompt_sha256", o.prompt_hash}, {"doc_count", o.doc_count}}.dump() + "\n";
        samples_out += samples_to_jsonl(q.id, o.samples);
        json votes = json::object();
        for (Letter l : kAllLetters) votes[std::string(1, to_char(l))] = o.votes.count(l);
        raw_out += json{{"id", q.id}, {"prediction", o.prediction.to_string()}, {"votes", votes}, {"k", o.votes.k}}.dump() +
                   "\n";
        for (const auto& s : o.samples) {
            invalid += s.valid ? 0 : 1;
            transport += s.error.empty() ? 0 : 1;
            requests += static_cast<std::size_t>(s.attempts);
        }
    }
    m.output(artifact::kPrompts, prompts_out);
    m.output(artifact::kSamples, samples_out);
    m.output(artifact::kRawPredictions, raw_out);
    m.count("questions", static_cast<double>(questions.size()));
    m.count("samples", static_cast<double>(questions.size()) * cfg.sampling.k);
    m.count("invalid_samples", static_cast<double>(invalid));
    m.count("transport_failures", static_cast<double>(transport));
    m.count("llm_requests", static_cast<double>(requests));
    return m.finish();
}

StageSummary run_postprocess(const RunConfig& cfg) {
    Manifest m(cfg, "postprocess");
    auto questions = staged_questions(cfg, m);
    auto raw_path = out_path(cfg, artifact::kRawPredictions);
    auto raw = to_map(load_predictions(raw_path));
    m.input(raw_path);

    CorpusFacts facts(questions);
    std::vector<LetterSet> preds;
    preds.reserve(questions.size());
    for (const auto& q : questions) {
        auto it = raw.find(q.id);
        if (it == raw.end()) throw Error("postprocess: no raw prediction for question '" + q.id + "' in " + raw_path.string());
        preds.push_back(it->second);
    }

    PredictionList final_preds;
    std::string audit;
    json summary;
    if (cfg.heuristics) {
        auto result = run_to_fixed_point(PredictionState(preds), facts, {cfg.max_iterations});
        for (std::size_t i = 0; i < questions.size(); ++i) final_preds.emplace_back(questions[i].id, result.state.get(i));
        for (const auto& c : result.report.changes) audit += change_to_json(c) + "\n";
        summary = json::parse(report_summary_json(result.report));
        auto violations = validity_violations(result.state.current(), facts, &result.truth, result.report.frozen);
        summary["validity_violations"] = violations;
        summary["heuristics"] = true;
        m.count("iterations", result.report.iterations);
        m.count("changes", static_cast<double>(result.report.changes.size()));
        m.count("contradictions", static_cast<double>(result.report.contradictions.size()));
        m.count("converged", result.report.converged ? 1.0 : 0.0);
        if (!result.report.converged) spdlog::error("postprocess: consistency rules did not converge");
    } else {
        for (std::size_t i = 0; i < questions.size(); ++i) final_preds.emplace_back(questions[i].id, preds[i]);
        summary = {{"heuristics", false}, {"iterations", 0}, {"total_changes", 0}};
        m.count("changes", 0);
    }
    m.output(artifact::kPredictions, predictions_to_jsonl(final_preds));
    m.output(artifact::kAudit, audit);
    m.output(artifact::kConsistency, summary.dump(2) + "\n");
    m.count("questions", static_cast<double>(questions.size()));
    return m.finish();
}

StageSummary run_score(const RunConfig& cfg, const ScoreInputs& inputs) {
    Manifest m(cfg, "score");
    fs::path pred_path = inputs.predictions.empty() ? out_path(cfg, artifact::kPredictions) : inputs.predictions;
    fs::path gold_path = inputs.gold.empty() ? out_path(cfg, artifact::kQuestions) : inputs.gold;
    if (!fs::exists(gold_path)) throw MissingArtifactError(gold_path.string());
    auto gold = load_questions(gold_path);
    auto preds = to_map(load_predictions(pred_path));
    m.input(gold_path);
    m.input(pred_path);

    auto report = score_run(preds, gold);
    if (!report.missing.empty()) spdlog::warn("score: {} question(s) have no prediction", report.missing.size());
    if (!report.extra.empty()) spdlog::warn("score: {} prediction(s) have no gold question", report.extra.size());
    m.output(artifact::kScore, score_report_json(report) + "\n");
    m.count("mean", report.mean);
    m.count("questions", static_cast<double>(report.questions.size()));
    m.count("exact", static_cast<double>(report.exact));
    m.count("partial", static_cast<double>(report.partial));
    m.count("zero", static_cast<double>(report.zero));
    m.count("missing", static_cast<double>(report.missing.size()));
    return m.finish();
}

StageSummary run_agree(const RunConfig& cfg, const std::vector<std::pair<std::string, fs::path>>& runs,
                       const fs::path& gold) {
    if (runs.size() < 2) throw ConfigError("agree: need at least two prediction files");
    Manifest m(cfg, "agree");
    fs::path gold_path = gold.empty() ? out_path(cfg, artifact::kQuestions) : gold;
    if (!fs::exists(gold_path)) throw MissingArtifactError(gold_path.string());
    auto questions = load_questions(gold_path);
    m.input(gold_path);
    std::vector<std::string> names;
    std::vector<PredictionMap> preds;
    for (const auto& [name, path] : runs) {
        names.push_back(name);
        preds.push_back(to_map(load_predictions(path)));
        m.input(path);
    }
    auto agree = agreement(names, preds, questions);
    json obj = json::parse(agreement_report_json(agree));

    bool has_gold = std::any_of(questions.begin(), questions.end(), [](const auto& q) { return q.gold.has_value(); });
    if (has_gold) {
        auto orc = oracle(names, preds, questions);
        json models = json::object();
        double best_individual = 0.0;
        for (std::size_t i = 0; i < names.size(); ++i) {
            double mean = score_run(preds[i], questions).mean;
            models[names[i]] = mean;
            best_individual = std::max(best_individual, mean);
        }
        obj["model_scores"] = models;
        obj["oracle_mean"] = orc.mean;
        auto bias = bias_stats(preds, questions);
        auto multi = bias_stats(preds, questions, [](const QuestionRecord& q) { return q.gold && q.gold->size() > 1; });
        auto bias_json = [](const BiasReport& b) {
            return json{{"pairs", b.questions},
                        {"under_selection", b.under_selection},
                        {"over_selection", b.over_selection},
                        {"under_letters", b.under_letters},
                        {"over_letters", b.over_letters},
                        {"mean_pred_cardinality", b.mean_pred_cardinality},
                        {"mean_gold_cardinality", b.mean_gold_cardinality}};
        };
        obj["bias"] = bias_json(bias);
        obj["bias_multi_answer"] = bias_json(multi);
        m.count("oracle_mean", orc.mean);
        m.count("best_individual_mean", best_individual);
    }
    m.output(artifact::kAgreement, obj.dump(2) + "\n");
    m.count("raters", static_cast<double>(names.size()));
    m.count("questions", static_cast<double>(questions.size()));
    m.count("fleiss_kappa", agree.fleiss_kappa);
    return m.finish();
}

namespace {

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string row(const std::string& label, const std::string& value) {
    std::ostringstream s;
    s << "  " << std::left << std::setw(32) << label << std::right << std::setw(12) << value << "\n";
    return s.str();
}

}  // namespace

StageSummary run_report(const RunConfig& cfg) {
    Manifest m(cfg, "report");
    auto score_path = out_path(cfg, artifact::kScore);
    json score = json::parse(read_text(score_path));
    m.input(score_path);
    json report = {{"model", cfg.model_label}, {"score", {{"mean", score.at("mean")},
                                                          {"exact", score.at("exact")},
                                                          {"partial", score.at("partial")},
                                                          {"zero", score.at("zero")},
                                                          {"single", score.at("single")},
                                                          {"multi", score.at("multi")},
                                                          {"gap", score.at("gap")}}}};
    std::string text = "Run report: " + cfg.model_label + "\n\nScore\n";
    text += row("questions", std::to_string(score.at("count").get<std::size_t>()));
    text += row("mean score", fixed(score.at("mean").get<double>()));
    text += row("exact / partial / zero", std::to_string(score.at("exact").get<int>()) + "/" +
                                              std::to_string(score.at("partial").get<int>()) + "/" +
                                              std::to_string(score.at("zero").get<int>()));
    text += row("single-answer mean", fixed(score.at("single").at("mean").get<double>()));
    text += row("multi-answer mean", fixed(score.at("multi").at("mean").get<double>()));
    text += row("single - multi gap", fixed(score.at("gap").get<double>()));

    auto retrieve_manifest = out_path(cfg, "retrieve.manifest.json");
    if (fs::exists(retrieve_manifest)) {
        json rm = json::parse(read_text(retrieve_manifest));
        const auto& c = rm.at("counts");
        report["retrieval"] = c;
        text += "\nRetrieval\n";
        text += row("context cache hit rate", fixed(c.at("cache_hit_rate").get<double>() * 100.0, 1) + "%");
        text += row("mean documents selected", fixed(c.at("mean_selected").get<double>(), 2));
    }

    auto consistency_path = out_path(cfg, artifact::kConsistency);
    if (fs::exists(consistency_path)) {
        json cs = json::parse(read_text(consistency_path));
        m.input(consistency_path);
        report["consistency"] = cs;
        text += "\nConsistency rules\n";
        if (cs.value("heuristics", false)) {
            text += row("iterations", std::to_string(cs.at("iterations").get<int>()));
            for (const auto& [rule, n] : cs.at("rule_counts").items()) text += row(rule + " changes", std::to_string(n.get<int>()));
            text += row("contradictions", std::to_string(cs.at("contradictions").size()));
        } else {
            text += row("heuristics", "off");
        }
    }

    auto agreement_path = out_path(cfg, artifact::kAgreement);
    if (fs::exists(agreement_path)) {
        json ag = json::parse(read_text(agreement_path));
        m.input(agreement_path);
        report["agreement"] = ag;
        text += "\nAgreement\n";
        text += row("Fleiss kappa", fixed(ag.at("fleiss_kappa").get<double>()));
        text += row("Krippendorff alpha (nominal)", fixed(ag.at("krippendorff_alpha_nominal").get<double>()));
        text += row("Krippendorff alpha (Jaccard)", fixed(ag.at("krippendorff_alpha_jaccard").get<double>()));
        text += row("unanimous agreement", fixed(ag.at("unanimous_rate").get<double>() * 100.0, 1) + "%");
        if (ag.contains("oracle_mean")) text += row("oracle (best per question)", fixed(ag.at("oracle_mean").get<double>()));
    }

    m.output(artifact::kReportText, text);
    m.output(artifact::kReportJson, report.dump(2) + "\n");
    m.count("mean", score.at("mean").get<double>());
    return m.finish();
}

std::vector<StageSummary> run_all(const RunConfig& cfg, Embedder* embedder, LlmClient* client) {
    cfg.validate();
    std::vector<StageSummary> out;
    out.push_back(run_ingest(cfg));
    out.push_back(run_build_graph(cfg, embedder));
    out.push_back(run_retrieve(cfg, embedder));
    out.push_back(run_infer(cfg, client));
    out.push_back(run_postprocess(cfg));
    out.push_back(run_score(cfg));
    out.push_back(run_report(cfg));
    return out;
}

std::string stage_summary_json(const StageSummary& s) {
    json counts = json::object();
    for (const auto& [k, v] : s.counts) counts[k] = v;
    return json{{"stage", s.stage}, {"counts", counts}, {"outputs", s.outputs}}.dump();
}

}  // namespace aer
