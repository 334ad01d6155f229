#pragma once

// Ingestion of the question and document JSONL files plus the structural
// facts (sibling groups, duplicate options, None options) derived from them.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aer/letters.hpp"

namespace aer {

using TopicId = std::int64_t;

/// Text after NFC composition, case folding, whitespace collapsing and
/// trailing sentence punctuation removal. Only `normalize_text` creates one.
class NormalizedText {
public:
    NormalizedText() = default;

    const std::string& str() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const NormalizedText&) const = default;

private:
    friend NormalizedText normalize_text(std::string_view s);
    explicit NormalizedText(std::string v) : value_(std::move(v)) {}
    std::string value_;
};

NormalizedText normalize_text(std::string_view s);

struct QuestionRecord {
    TopicId topic_id = 0;
    std::string id;
    std::string target_event;
    std::array<std::string, 4> options;  // indexed by Letter
    std::optional<LetterSet> gold;

    const std::string& option(Letter l) const { return options[static_cast<std::size_t>(index_of(l))]; }
    bool operator==(const QuestionRecord&) const = default;
};

struct DocumentRecord {
    TopicId topic_id = 0;
    std::string id;
    std::string title;
    std::string snippet;
    std::string source;
    std::string link;
    std::string content;

    bool operator==(const DocumentRecord&) const = default;
};

/// A document rejected during loading; the rest of its topic is kept.
struct RejectedDocument {
    TopicId topic_id = 0;
    std::string id;
    std::size_t line = 0;
    std::string reason;
};

struct DocCorpus {
    std::map<TopicId, std::vector<DocumentRecord>> topics;
    std::map<TopicId, std::string> topic_titles;
    std::vector<RejectedDocument> rejected;

    std::size_t document_count() const;
    const std::vector<DocumentRecord>& docs(TopicId topic) const;  // empty list for unknown topics
};

/// Loads one question per line. Throws IngestError (with line number) on
/// malformed JSON, missing required fields, bad answer letters or duplicate ids.
std::vector<QuestionRecord> load_questions(const std::filesystem::path& path);
std::vector<QuestionRecord> parse_questions(std::string_view jsonl, const std::string& source_name = "<memory>");

/// Loads one topic object per line. `imageUrl` is discarded; documents whose
/// content is blank are listed in `rejected` instead of failing the load.
DocCorpus load_docs(const std::filesystem::path& path);
DocCorpus parse_docs(std::string_view jsonl, const std::string& source_name = "<memory>");

std::string question_to_json(const QuestionRecord& q);
std::string questions_to_jsonl(const std::vector<QuestionRecord>& qs);
std::string docs_to_jsonl(const DocCorpus& corpus);

/// True iff the normalized text starts with "none of the".
bool detect_none_option(std::string_view option_text);

/// Letters whose normalized texts are equal share a class. Classes are
/// ordered by their smallest letter and together cover {A,B,C,D}.
std::vector<LetterSet> duplicate_classes(const QuestionRecord& q);

struct SiblingGroup {
    TopicId topic_id = 0;
    NormalizedText target_event_key;
    std::vector<std::string> question_ids;
};

/// Groups by (topic_id, normalize_text(target_event)) in first-seen order.
std::vector<SiblingGroup> sibling_groups(const std::vector<QuestionRecord>& questions);

/// Per-question structural facts consumed by aggregation and consistency.
struct QuestionFacts {
    std::array<NormalizedText, 4> option_keys;
    LetterSet none_letters;
    std::vector<LetterSet> duplicate_classes;
    std::size_t group_index = 0;

    const NormalizedText& key(Letter l) const { return option_keys[static_cast<std::size_t>(index_of(l))]; }
    /// The duplicate class containing `l`.
    LetterSet class_of(Letter l) const;
    LetterSet substantive_letters() const { return LetterSet::all() - none_letters; }
};

class CorpusFacts {
public:
    explicit CorpusFacts(std::vector<QuestionRecord> questions);

    const std::vector<QuestionRecord>& questions() const { return questions_; }
    const std::vector<SiblingGroup>& groups() const { return groups_; }
    const QuestionFacts& facts(std::size_t question_index) const { return facts_[question_index]; }
    std::optional<std::size_t> position_of(std::string_view question_id) const;

    /// Share of sibling groups containing two or more questions.
    double multi_question_group_share() const;

private:
    std::vector<QuestionRecord> questions_;
    std::vector<SiblingGroup> groups_;
    std::vector<QuestionFacts> facts_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace aer
