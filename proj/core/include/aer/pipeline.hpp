#pragma once

// Stage functions behind the CLI. Each stage reads the previous stage's
// JSONL artifacts from the output directory, writes its own, and records a
// manifest with the config hash, input/output SHA-256 and counts.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aer/config.hpp"
#include "aer/embed.hpp"
#include "aer/llm_client.hpp"

namespace aer {

namespace artifact {
inline constexpr const char* kQuestions = "questions.jsonl";
inline constexpr const char* kDocs = "docs.jsonl";
inline constexpr const char* kCorpusFacts = "corpus_facts.json";
inline constexpr const char* kEmbeddings = "embeddings.jsonl";
inline constexpr const char* kGraphs = "graphs.jsonl";
inline constexpr const char* kRetrieval = "retrieval.jsonl";
inline constexpr const char* kPrompts = "prompts.jsonl";
inline constexpr const char* kSamples = "samples.jsonl";
inline constexpr const char* kRawPredictions = "predictions.raw.jsonl";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kAudit = "audit.jsonl";
inline constexpr const char* kConsistency = "consistency_summary.json";
inline constexpr const char* kScore = "score.json";
inline constexpr const char* kAgreement = "agreement.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kReportJson = "report.json";
}  // namespace artifact

struct StageSummary {
    std::string stage;
    std::map<std::string, double> counts;
    std::vector<std::string> outputs;  // file names inside the output directory
};

StageSummary run_ingest(const RunConfig& cfg);
/// `embedder` overrides the one described by cfg.embedder when non-null.
StageSummary run_build_graph(const RunConfig& cfg, Embedder* embedder = nullptr);
StageSummary run_retrieve(const RunConfig& cfg, Embedder* embedder = nullptr);
/// `client` overrides the one described by cfg.llm when non-null.
StageSummary run_infer(const RunConfig& cfg, LlmClient* client = nullptr);
StageSummary run_postprocess(const RunConfig& cfg);

struct ScoreInputs {
    std::filesystem::path predictions;  // default: <out>/predictions.jsonl
    std::filesystem::path gold;         // default: <out>/questions.jsonl
};
StageSummary run_score(const RunConfig& cfg, const ScoreInputs& inputs = {});

/// Agreement, oracle and selection bias across named prediction files.
StageSummary run_agree(const RunConfig& cfg, const std::vector<std::pair<std::string, std::filesystem::path>>& runs,
                       const std::filesystem::path& gold = {});

StageSummary run_report(const RunConfig& cfg);

/// ingest, build-graph, retrieve, infer, postprocess, score, report.
std::vector<StageSummary> run_all(const RunConfig& cfg, Embedder* embedder = nullptr, LlmClient* client = nullptr);

std::string stage_summary_json(const StageSummary& s);

}  // namespace aer
