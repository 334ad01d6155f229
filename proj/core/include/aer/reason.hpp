#pragma once

// Stage 2: prompt rendering, response parsing, k-sample inference and
// per-option vote aggregation.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aer/corpus.hpp"
#include "aer/letters.hpp"
#include "aer/llm_client.hpp"

namespace aer {

struct RenderedPrompt {
    std::string text;
    std::size_t doc_count = 0;
    std::string question_id;
};

/// Fills the structured zero-shot template. Documents appear as
/// `<document_i>: title\ncontent</document_i>` in the given order; `&`, `<`
/// and `>` in injected text are escaped. Throws std::invalid_argument when
/// `context_docs` is empty.
RenderedPrompt render_prompt(const QuestionRecord& q, std::span<const DocumentRecord> context_docs);

/// SHA-256 of the prompt text.
std::string prompt_hash(const RenderedPrompt& p);

std::string escape_markup(std::string_view text);

struct ParsedPrediction {
    LetterSet letters;
    std::string analysis;
    bool valid = false;
    std::string raw;
    int attempts = 1;   // requests spent on this sample
    std::string error;  // transport failure message, empty otherwise
};

/// Reads the last <answer> block. Tokens are split on commas and whitespace
/// and must each be a single letter A-D (any case); otherwise, or when the
/// block is missing or empty, the result is invalid with no letters.
ParsedPrediction parse_response(std::string_view raw);

struct SamplingParams {
    int k = 3;
    double temperature = 1.0;
    int max_retries_on_parse_failure = 2;

    void validate() const;  // throws std::invalid_argument
};

/// Requests k samples. An unparseable response is re-requested up to
/// max_retries_on_parse_failure times; a transport failure yields an invalid
/// placeholder carrying the error message.
std::vector<ParsedPrediction> sample_question(const QuestionRecord& q, const RenderedPrompt& prompt,
                                              LlmClient& client, const SamplingParams& params);

struct VoteTally {
    std::array<int, 4> counts{};
    int k = 0;

    int count(Letter l) const { return counts[static_cast<std::size_t>(index_of(l))]; }
    bool operator==(const VoteTally&) const = default;
};

/// counts[L] = valid samples containing L; k = all samples, valid or not.
VoteTally tally(std::span<const ParsedPrediction> samples);

/// Letters with count / k >= theta, before conflict resolution and fallback.
LetterSet threshold_select(const VoteTally& t, double theta);

struct AggregationParams {
    double theta = 0.5;

    void validate() const;  // throws std::invalid_argument unless 0 < theta <= 1
};

/// Named strategies: "any" 0.33, "half" 0.50, "majority" 0.67, "unanimous" 1.00.
double strategy_theta(std::string_view name);  // throws std::invalid_argument

/// Threshold selection followed by None/substantive conflict resolution
/// (higher vote wins, ties keep substantive) and, if nothing survives, the
/// single top-voted letter (ties alphabetical). `none_letters` marks the
/// "None of the others" options.
LetterSet aggregate(const VoteTally& t, LetterSet none_letters, double theta);
LetterSet aggregate(const VoteTally& t, const QuestionRecord& q, double theta);

std::string samples_to_jsonl(const std::string& question_id, std::span<const ParsedPrediction> samples);

}  // namespace aer
