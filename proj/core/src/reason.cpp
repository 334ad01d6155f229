#include "aer/reason.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <json.hpp>
#include <stdexcept>

#include "aer/errors.hpp"
#include "aer/hashing.hpp"

namespace aer {

using json = nlohmann::json;

namespace {

constexpr std::string_view kHead = R"(<role>
You are an expert in identifying the direct cause of events from textual evidence.
</role>

<task>
Given an event, context documents, and candidate explanations, analyze systematically to identify the most plausible direct cause(s).
</task>

<input_format>
<context_documents>
)";

constexpr std::string_view kTail = R"(</input_format>

<instructions>

<reasoning_criteria>
- Base your reasoning ONLY on evidence from the provided context documents
- Look for direct causal relationships, not just correlations or temporal sequences
- Test logical sufficiency: Would this factor alone reasonably be enough to cause the event?
- Require both conditions: Direct textual support AND logical sufficiency to cause the event
- Use single-step reasoning: Avoid multi-step causal chains or indirect relationships
- Prioritize explicit causal language: "caused by," "resulted from," "led to," "triggered by," "due to"
</reasoning_criteria>

<selection_rules>
- Multiple options can be correct - choose ALL that apply
- Select multiple options only if each cause has strong evidence and is individually sufficient
- If options contradict each other, select the one with stronger textual evidence
- Always output ALL correct options, including duplicates: if options are duplicate/identical but correct, include both letters
- If none seems perfectly sufficient, select the single best-supported among A-D.
- NEVER create options beyond A, B, C, D
- There is always at least one correct option from A-D
</selection_rules>

<quality_checks>
- Verify each selected option has direct quotes or paraphrases from context
- Ensure you haven't made assumptions beyond what's explicitly stated
- Confirm logical sufficiency: could this realistically cause the event by itself?
- Valid answers in the <answer> section are only A,B,C,D; never output anything else; if uncertain, pick the best-supported among A-D and output it without explanations.
</quality_checks>

</instructions>

<output_format>

Provide your answer in EXACTLY this format (no additional text before or after):

<analysis>
Option A: [Your brief reasoning for option A - 1-2 sentences]
Option B: [Your brief reasoning for option B - 1-2 sentences]
Option C: [Your brief reasoning for option C - 1-2 sentences]
Option D: [Your brief reasoning for option D - 1-2 sentences]
</analysis>

<answer>
[Letter(s) ONLY - e.g., "B" or "B,D" or "C"]
</answer>

CRITICAL FORMATTING RULES:
- Start your response with <analysis> (no text before it)
- End your response with </answer> (no text after it)
- In <answer> tags, write ONLY letters: A, B, C, or D (comma-separated for multiple)
- DO NOT write "Option A" or "Option B" in the <answer> tags - just the letter(s)

</output_format>
)";

// Content of the last <tag>...</tag> pair, if any.
std::optional<std::string_view> last_block(std::string_view text, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    auto end = text.rfind(close);
    if (end == std::string_view::npos) return std::nullopt;
    auto start = text.rfind(open, end);
    if (start == std::string_view::npos) return std::nullopt;
    start += open.size();
    return text.substr(start, end - start);
}

std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string escape_markup(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

RenderedPrompt render_prompt(const QuestionRecord& q, std::span<const DocumentRecord> context_docs) {
    if (context_docs.empty()) throw std::invalid_argument("render_prompt: question '" + q.id + "' has no context");
    std::string text(kHead);
    for (std::size_t i = 0; i < context_docs.size(); ++i) {
        const auto& d = context_docs[i];
        std::string n = std::to_string(i + 1);
        text += "<document_" + n + ">: " + escape_markup(d.title) + "\n" + escape_markup(d.content) + "</document_" +
                n + ">\n";
    }
    text += "</context_documents>\n\n<target_event>" + escape_markup(q.target_event) + "</target_event>\n\n<options>\n";
    for (Letter l : kAllLetters) {
        std::string tag = std::string("option_") + static_cast<char>('a' + index_of(l));
        text += "<" + tag + ">" + escape_markup(q.option(l)) + "</" + tag + ">\n";
    }
    text += "</options>\n";
    text += kTail;
    return {std::move(text), context_docs.size(), q.id};
}

std::string prompt_hash(const RenderedPrompt& p) { return sha256_hex(p.text); }

ParsedPrediction parse_response(std::string_view raw) {
    ParsedPrediction out;
    out.raw = std::string(raw);
    if (auto a = last_block(raw, "analysis")) out.analysis = std::string(trim(*a));
    auto answer = last_block(raw, "answer");
    if (!answer) return out;

    LetterSet letters;
    std::string_view body = *answer;
    std::size_t i = 0;
    while (i < body.size()) {
        auto sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
        while (i < body.size() && sep(body[i])) ++i;
        std::size_t start = i;
        while (i < body.size() && !sep(body[i])) ++i;
        if (i == start) break;
        std::string_view token = body.substr(start, i - start);
        auto letter = token.size() == 1 ? letter_from_char(token[0]) : std::nullopt;
        if (!letter) return out;
        letters.insert(*letter);
    }
    if (letters.empty()) return out;
    out.letters = letters;
    out.valid = true;
    return out;
}

void SamplingParams::validate() const {
    if (k < 1) throw std::invalid_argument("sampling: k must be >= 1");
    if (!(temperature >= 0.0)) throw std::invalid_argument("sampling: temperature must be >= 0");
    if (max_retries_on_parse_failure < 0) throw std::invalid_argument("sampling: retries must be >= 0");
}

std::vector<ParsedPrediction> sample_question(const QuestionRecord& q, const RenderedPrompt& prompt,
                                              LlmClient& client, const SamplingParams& params) {
    params.validate();
    std::vector<ParsedPrediction> out;
    out.reserve(static_cast<std::size_t>(params.k));
    for (int s = 0; s < params.k; ++s) {
        ParsedPrediction pred;
        for (int attempt = 0; attempt <= params.max_retries_on_parse_failure; ++attempt) {
            ChatRequest req{q.id, prompt.text, params.temperature, s, attempt};
            try {
                pred = parse_response(client.complete(req));
            } catch (const TransportError& e) {
                spdlog::warn("question {} sample {}: {}", q.id, s, e.what());
                pred = ParsedPrediction{};
                pred.error = e.what();
            }
            pred.attempts = attempt + 1;
            if (pred.valid || !pred.error.empty()) break;
        }
        if (!pred.valid && pred.error.empty()) {
            spdlog::info("question {} sample {}: unparseable after {} attempts", q.id, s, pred.attempts);
        }
        out.push_back(std::move(pred));
    }
    return out;
}

VoteTally tally(std::span<const ParsedPrediction> samples) {
    VoteTally t;
    t.k = static_cast<int>(samples.size());
    for (const auto& s : samples) {
        if (!s.valid) continue;
        for (Letter l : s.letters.letters()) ++t.counts[static_cast<std::size_t>(index_of(l))];
    }
    return t;
}

void AggregationParams::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("aggregation: theta must lie in (0,1]");
}

double strategy_theta(std::string_view name) {
    if (name == "any") return 0.33;
    if (name == "half") return 0.50;
    if (name == "majority") return 0.67;
    if (name == "unanimous") return 1.00;
    throw std::invalid_argument("unknown aggregation strategy '" + std::string(name) + "'");
}

LetterSet threshold_select(const VoteTally& t, double theta) {
    AggregationParams{theta}.validate();
    LetterSet out;
    if (t.k <= 0) return out;
    for (Letter l : kAllLetters) {
        if (static_cast<double>(t.count(l)) / static_cast<double>(t.k) >= theta) out.insert(l);
    }
    return out;
}

LetterSet aggregate(const VoteTally& t, LetterSet none_letters, double theta) {
    LetterSet picked = threshold_select(t, theta);
    LetterSet none_part = picked & none_letters;
    LetterSet substantive_part = picked - none_letters;
    if (!none_part.empty() && !substantive_part.empty()) {
        auto max_count = [&](LetterSet s) {
            int m = 0;
            for (Letter l : s.letters()) m = std::max(m, t.count(l));
            return m;
        };
        picked = max_count(none_part) > max_count(substantive_part) ? none_part : substantive_part;
    }
    if (picked.empty()) {
        Letter best = Letter::A;
        for (Letter l : kAllLetters) {
            if (t.count(l) > t.count(best)) best = l;
        }
        picked.insert(best);
    }
    return picked;
}

LetterSet aggregate(const VoteTally& t, const QuestionRecord& q, double theta) {
    LetterSet none;
    for (Letter l : kAllLetters) {
        if (detect_none_option(q.option(l))) none.insert(l);
    }
    return aggregate(t, none, theta);
}

std::string samples_to_jsonl(const std::string& question_id, std::span<const ParsedPrediction> samples) {
    std::string out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        std::vector<std::string> letters;
        for (Letter l : s.letters.letters()) letters.emplace_back(1, to_char(l));
        json row = {{"question_id", question_id}, {"sample_index", i}, {"raw", s.raw},
                    {"parsed", letters},          {"valid", s.valid},  {"attempts", s.attempts}};
        if (!s.error.empty()) row["error"] = s.error;
        out += row.dump() + "\n";
    }
    return out;
}

}  // namespace aer
