// aer: command-line driver for the retrieval, inference, consistency and
// scoring stages.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "aer/config.hpp"
#include "aer/errors.hpp"
#include "aer/pipeline.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string questions;
    std::string docs;
    std::string out;
    std::string model;
    int k = 0;
    double theta = 0.0;
    double alpha = 0.0;
    double edge_threshold = 0.0;
    bool no_heuristics = false;
    bool topic_union = false;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    bool verbose = false;
    bool quiet = false;
};

struct Flags {
    CLI::Option* questions = nullptr;
    CLI::Option* docs = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* model = nullptr;
    CLI::Option* k = nullptr;
    CLI::Option* theta = nullptr;
    CLI::Option* alpha = nullptr;
    CLI::Option* edge_threshold = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* workers = nullptr;
};

aer::RunConfig build_config(const Overrides& o, const Flags& f) {
    aer::RunConfig cfg;
    if (!o.config.empty()) aer::apply_config_file(cfg, o.config);
    if (f.questions->count()) cfg.questions = o.questions;
    if (f.docs->count()) cfg.docs = o.docs;
    if (f.out->count()) cfg.out_dir = o.out;
    if (f.model->count()) {
        cfg.llm.model = o.model;
        cfg.model_label = o.model;
    }
    if (f.k->count()) cfg.sampling.k = o.k;
    if (f.theta->count()) cfg.aggregation.theta = o.theta;
    if (f.alpha->count()) cfg.hybrid.alpha = o.alpha;
    if (f.edge_threshold->count()) cfg.hybrid.edge_threshold = o.edge_threshold;
    if (f.seed->count()) {
        cfg.seed = o.seed;
        cfg.embedder.seed = o.seed;
    }
    if (f.workers->count()) cfg.workers = o.workers;
    if (o.no_heuristics) cfg.heuristics = false;
    if (o.topic_union) cfg.topic_union = true;
    cfg.validate();
    return cfg;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const aer::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const aer::MissingArtifactError*>(&e)) return 3;
    if (dynamic_cast<const aer::IngestError*>(&e)) return 4;
    if (dynamic_cast<const aer::TransportError*>(&e)) return 5;
    return 1;
}

const char* kind_of(const std::exception& e) {
    if (dynamic_cast<const aer::ConfigError*>(&e)) return "config";
    if (dynamic_cast<const aer::MissingArtifactError*>(&e)) return "missing_artifact";
    if (dynamic_cast<const aer::IngestError*>(&e)) return "ingest";
    if (dynamic_cast<const aer::TransportError*>(&e)) return "transport";
    if (dynamic_cast<const aer::EmbeddingError*>(&e)) return "embedding";
    if (dynamic_cast<const aer::IndexMismatchError*>(&e)) return "index_mismatch";
    return "internal";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Abductive event reasoning pipeline: retrieval, inference, consistency rules and scoring"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "aer 0.1.0");

    Overrides o;
    Flags f;
    app.add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    f.questions = app.add_option("--questions", o.questions, "questions JSONL");
    f.docs = app.add_option("--docs", o.docs, "documents JSONL");
    f.out = app.add_option("--out", o.out, "output directory for artifacts");
    f.model = app.add_option("--model", o.model, "LLM model name (also used as the report label)");
    f.k = app.add_option("--k", o.k, "samples per question");
    f.theta = app.add_option("--theta", o.theta, "per-option inclusion threshold in (0,1]");
    f.alpha = app.add_option("--alpha", o.alpha, "dense weight of the hybrid edge score");
    f.edge_threshold = app.add_option("--edge-threshold", o.edge_threshold, "minimum hybrid edge weight");
    f.seed = app.add_option("--seed", o.seed, "seed for the mock embedder");
    f.workers = app.add_option("--workers", o.workers, "questions processed concurrently during inference");
    app.add_flag("--no-heuristics", o.no_heuristics, "skip the consistency rules");
    app.add_flag("--topic-union", o.topic_union, "merge every question's retrieval into its topic context");
    app.add_flag("-v,--verbose", o.verbose, "debug logging");
    app.add_flag("-q,--quiet", o.quiet, "only log errors");

    auto* ingest = app.add_subcommand("ingest", "validate and normalize questions and documents");
    auto* build = app.add_subcommand("build-graph", "embed documents and build per-topic graphs");
    auto* retrieve = app.add_subcommand("retrieve", "select context documents for every question");
    auto* infer = app.add_subcommand("infer", "sample the LLM and aggregate votes");
    auto* post = app.add_subcommand("postprocess", "apply consistency rules to the raw predictions");
    auto* score = app.add_subcommand("score", "score predictions against gold answers");
    auto* agree = app.add_subcommand("agree", "agreement, oracle and selection bias across prediction files");
    auto* report = app.add_subcommand("report", "summarize the run as text and JSON");
    auto* run = app.add_subcommand("run", "ingest through report in one go");

    std::string score_predictions, score_gold;
    score->add_option("--predictions", score_predictions, "predictions JSONL (default: <out>/predictions.jsonl)");
    score->add_option("--gold", score_gold, "gold questions JSONL (default: <out>/questions.jsonl)");

    std::vector<std::string> agree_runs;
    std::string agree_gold;
    agree->add_option("--run", agree_runs, "NAME=PATH of a predictions JSONL (repeat for each model)")->required();
    agree->add_option("--gold", agree_gold, "gold questions JSONL (default: <out>/questions.jsonl)");

    for (auto* sub : {ingest, build, retrieve, infer, post, score, agree, report, run}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("aer"));
    spdlog::set_level(o.verbose ? spdlog::level::debug : o.quiet ? spdlog::level::err : spdlog::level::info);

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        aer::RunConfig cfg = build_config(o, f);
        std::vector<aer::StageSummary> done;
        if (*ingest) done.push_back(aer::run_ingest(cfg));
        if (*build) done.push_back(aer::run_build_graph(cfg));
        if (*retrieve) done.push_back(aer::run_retrieve(cfg));
        if (*infer) done.push_back(aer::run_infer(cfg));
        if (*post) done.push_back(aer::run_postprocess(cfg));
        if (*score) done.push_back(aer::run_score(cfg, {score_predictions, score_gold}));
        if (*agree) {
            std::vector<std::pair<std::string, std::filesystem::path>> runs;
            for (const auto& spec : agree_runs) {
                auto eq = spec.find('=');
                if (eq == std::string::npos || eq == 0) {
                    throw aer::ConfigError("agree: --run expects NAME=PATH, got '" + spec + "'");
                }
                runs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
            }
            done.push_back(aer::run_agree(cfg, runs, agree_gold));
        }
        if (*report) done.push_back(aer::run_report(cfg));
        if (*run) done = aer::run_all(cfg);
        for (const auto& s : done) std::cout << aer::stage_summary_json(s) << "\n";
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", {{"stage", stage}, {"type", kind_of(e)}, {"message", e.what()}}}};
        std::cerr << err.dump() << std::endl;
        return exit_code_for(e);
    }
    return 0;
}
