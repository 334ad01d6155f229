#pragma once

// Run configuration: defaults, a key = value file format and a canonical
// rendering used for manifest hashes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "aer/embed.hpp"
#include "aer/graphrag.hpp"
#include "aer/lexindex.hpp"
#include "aer/llm_client.hpp"
#include "aer/reason.hpp"

namespace aer {

struct RunConfig {
    std::filesystem::path questions;
    std::filesystem::path docs;
    std::filesystem::path out_dir = "out";

    HybridParams hybrid;
    Bm25Params bm25;
    EmbedderSpec embedder;
    LlmClientSpec llm;
    SamplingParams sampling;
    AggregationParams aggregation;

    bool heuristics = true;
    bool topic_union = false;  // merge every question's retrieval into its topic context
    std::uint64_t seed = 0;
    std::size_t workers = 4;   // concurrent questions during inference
    int max_iterations = 10;   // consistency safety cap
    std::string model_label = "model";

    /// Throws ConfigError describing the first invalid value.
    void validate() const;
};

/// Applies `key = value` lines ('#' starts a comment). Relative paths are
/// resolved against `base_dir`. Unknown keys throw ConfigError.
void apply_config_text(RunConfig& cfg, std::string_view text, const std::filesystem::path& base_dir = {},
                       const std::string& source_name = "<config>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Sets one key; throws ConfigError on an unknown key or unparsable value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value,
                      const std::filesystem::path& base_dir = {});

/// Deterministic `key = value` dump of every behavioural setting. Paths and
/// secrets are left out so equal settings hash equally across machines.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace aer
