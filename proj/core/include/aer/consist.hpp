#pragma once

// Stage 3: consistency rules R1-R8 applied to predictions as constraint
// propagation over per-group option-text truth values, iterated to a fixed
// point with an audit trail.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aer/corpus.hpp"
#include "aer/letters.hpp"

namespace aer {

enum class Truth : std::uint8_t { Unknown, True, False };
const char* to_string(Truth t);

enum class Rule : std::uint8_t { R1 = 0, R2, R3, R4, R5, R6, R7, R8 };
inline constexpr std::size_t kRuleCount = 8;
const char* to_string(Rule r);

/// Current predictions aligned with CorpusFacts::questions(), plus the
/// untouched originals.
class PredictionState {
public:
    explicit PredictionState(std::vector<LetterSet> predictions)
        : current_(predictions), original_(std::move(predictions)) {}

    LetterSet get(std::size_t q) const { return current_[q]; }
    void set(std::size_t q, LetterSet s) { current_[q] = s; }
    LetterSet original(std::size_t q) const { return original_[q]; }
    std::size_t size() const { return current_.size(); }
    const std::vector<LetterSet>& current() const { return current_; }

private:
    std::vector<LetterSet> current_;
    std::vector<LetterSet> original_;
};

/// Truth values for the substantive option texts of each sibling group.
/// Values only move away from Unknown; a conflicting assignment is refused.
class TruthAssignment {
public:
    explicit TruthAssignment(std::size_t group_count) : groups_(group_count) {}

    Truth get(std::size_t group, const NormalizedText& text) const;
    /// Returns false (and changes nothing) when the text already holds the
    /// opposite value. Returns true otherwise.
    bool set(std::size_t group, const NormalizedText& text, Truth value);
    const std::map<NormalizedText, Truth>& group(std::size_t g) const { return groups_[g]; }

    bool operator==(const TruthAssignment&) const = default;

private:
    std::vector<std::map<NormalizedText, Truth>> groups_;
};

/// A substantive text becomes True when it is selected in any question of
/// its group. The substantive options of a None-only question are exclusion
/// candidates and stay Unknown.
TruthAssignment seed_truth(const PredictionState& state, const CorpusFacts& facts);

/// Truth of the letter `l` in question `q`. None letters are derived: False
/// if any substantive option is True, True if all are False, else Unknown.
Truth letter_truth(const TruthAssignment& truth, const CorpusFacts& facts, std::size_t q, Letter l);

// Single-question rules.
LetterSet r1_none_exclusivity(const QuestionFacts& f, LetterSet pred);
LetterSet r2_duplicate_consistency(const QuestionFacts& f, LetterSet pred);
LetterSet r3_overselection_guard(const QuestionFacts& f, LetterSet pred);
/// The letter dropped by R5, if a size-3 class is fully selected alongside it.
std::optional<Letter> r5_excluded_letter(const QuestionFacts& f, LetterSet pred);

struct ChangeRecord {
    std::string question_id;
    Rule rule = Rule::R1;
    LetterSet before;
    LetterSet after;
    int iteration = 0;

    bool operator==(const ChangeRecord&) const = default;
};

struct TruthEvent {
    std::size_t group = 0;
    std::string text;
    Truth value = Truth::Unknown;
    Rule rule = Rule::R1;
    int iteration = 0;

    bool operator==(const TruthEvent&) const = default;
};

struct Contradiction {
    std::string question_id;
    Rule rule = Rule::R1;
    std::string detail;
    int iteration = 0;

    bool operator==(const Contradiction&) const = default;
};

struct FixedPointReport {
    int iterations = 0;
    bool converged = false;
    std::vector<ChangeRecord> changes;
    std::array<std::size_t, kRuleCount> rule_counts{};
    std::vector<Contradiction> contradictions;
    std::vector<TruthEvent> truth_events;
    std::vector<std::string> frozen;  // questions restored to their original prediction
};

struct ConsistencyOptions {
    int max_iterations = 10;
};

struct ConsistencyResult {
    PredictionState state;
    TruthAssignment truth;
    FixedPointReport report;
};

/// Applies R1..R8 in order over every sibling group until an iteration
/// changes neither a prediction nor a truth value, or the iteration cap is
/// reached (report.converged = false, partial state returned).
ConsistencyResult run_to_fixed_point(const PredictionState& state, const CorpusFacts& facts,
                                     const ConsistencyOptions& options = {});

/// Empty when `predictions` satisfies the output invariants; otherwise one
/// message per violation. `frozen` questions are exempt from the truth check.
std::vector<std::string> validity_violations(const std::vector<LetterSet>& predictions, const CorpusFacts& facts,
                                             const TruthAssignment* truth = nullptr,
                                             const std::vector<std::string>& frozen = {});

std::string change_to_json(const ChangeRecord& c);
std::string report_summary_json(const FixedPointReport& r);

}  // namespace aer
