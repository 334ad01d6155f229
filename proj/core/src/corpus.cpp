#include "aer/corpus.hpp"

#include <spdlog/spdlog.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "aer/errors.hpp"

namespace aer {

using json = nlohmann::json;

namespace {

bool is_trailing_punct(UChar32 c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '!': case '?':
        case 0x2026:  // ellipsis
        case 0x3002:  // ideographic full stop
        case 0xFF01: case 0xFF0C: case 0xFF1A: case 0xFF1B: case 0xFF1F:
            return true;
        default:
            return false;
    }
}

icu::UnicodeString nfc(const icu::UnicodeString& s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    icu::UnicodeString out = norm->normalize(s, status);
    if (U_FAILURE(status)) throw Error("ICU normalization failed");
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line_no, line);
        if (end == text.size()) break;
        pos = end + 1;
    }
}

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

TopicId read_topic_id(const json& obj, const std::string& src, std::size_t line) {
    auto it = obj.find("topic_id");
    if (it == obj.end()) throw IngestError(src, line, "missing required field 'topic_id'");
    if (it->is_number_integer()) return it->get<TopicId>();
    if (it->is_string()) {
        const auto& s = it->get_ref<const std::string&>();
        try {
            std::size_t used = 0;
            TopicId v = std::stoll(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw IngestError(src, line, "field 'topic_id' must be an integer");
}

std::string read_string(const json& obj, const char* key, const std::string& src, std::size_t line,
                        bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) throw IngestError(src, line, std::string("missing required field '") + key + "'");
        return {};
    }
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw IngestError(src, line, std::string("field '") + key + "' must be a string");
}

json parse_line(std::string_view line, const std::string& src, std::size_t line_no) {
    try {
        json obj = json::parse(line);
        if (!obj.is_object()) throw IngestError(src, line_no, "expected a JSON object");
        return obj;
    } catch (const json::parse_error& e) {
        throw IngestError(src, line_no, std::string("malformed JSON: ") + e.what());
    }
}

const std::set<std::string, std::less<>> kQuestionFields = {
    "topic_id", "id", "target_event", "option_A", "option_B", "option_C", "option_D", "golden_answer"};
const std::set<std::string, std::less<>> kTopicFields = {"topic_id", "topic", "docs"};
const std::set<std::string, std::less<>> kDocFields = {"title", "id", "link", "snippet", "source", "imageUrl",
                                                       "content"};

void log_unknown(const std::set<std::string>& unknown, const std::string& src) {
    if (unknown.empty()) return;
    std::string names;
    for (const auto& n : unknown) names += (names.empty() ? "" : ", ") + n;
    spdlog::info("{}: ignoring unknown fields: {}", src, names);
}

}  // namespace

NormalizedText normalize_text(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u = nfc(u);
    u.foldCase(U_FOLD_CASE_DEFAULT);
    u = nfc(u);

    icu::UnicodeString collapsed;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();) {
        UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (u_isUWhiteSpace(c)) {
            pending_space = !collapsed.isEmpty();
            continue;
        }
        if (pending_space) collapsed.append(static_cast<UChar>(' '));
        pending_space = false;
        collapsed.append(c);
    }

    // Strip trailing punctuation and any whitespace it uncovers.
    for (;;) {
        int32_t len = collapsed.length();
        if (len == 0) break;
        UChar32 last = collapsed.char32At(collapsed.moveIndex32(len, -1));
        if (is_trailing_punct(last) || last == ' ') {
            collapsed.truncate(collapsed.moveIndex32(len, -1));
        } else {
            break;
        }
    }

    std::string out;
    collapsed.toUTF8String(out);
    return NormalizedText(std::move(out));
}

std::size_t DocCorpus::document_count() const {
    std::size_t n = 0;
    for (const auto& [_, docs] : topics) n += docs.size();
    return n;
}

const std::vector<DocumentRecord>& DocCorpus::docs(TopicId topic) const {
    static const std::vector<DocumentRecord> kEmpty;
    auto it = topics.find(topic);
    return it == topics.end() ? kEmpty : it->second;
}

std::vector<QuestionRecord> parse_questions(std::string_view jsonl, const std::string& src) {
    std::vector<QuestionRecord> out;
    std::set<std::string> seen_ids;
    std::set<std::string> unknown;
    for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
        json obj = parse_line(line, src, line_no);
        QuestionRecord q;
        q.topic_id = read_topic_id(obj, src, line_no);
        q.id = read_string(obj, "id", src, line_no, true);
        q.target_event = read_string(obj, "target_event", src, line_no, true);
        for (Letter l : kAllLetters) {
            std::string key = std::string("option_") + to_char(l);
            q.options[static_cast<std::size_t>(index_of(l))] = read_string(obj, key.c_str(), src, line_no, true);
        }
        if (auto it = obj.find("golden_answer"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) throw IngestError(src, line_no, "field 'golden_answer' must be a string");
            try {
                LetterSet gold = LetterSet::parse(it->get_ref<const std::string&>());
                if (gold.empty()) throw IngestError(src, line_no, "field 'golden_answer' is empty");
                q.gold = gold;
            } catch (const std::invalid_argument& e) {
                throw IngestError(src, line_no, std::string("golden_answer: ") + e.what());
            }
        }
        for (const auto& [key, _] : obj.items()) {
            if (!kQuestionFields.contains(key)) unknown.insert(key);
        }
        if (!seen_ids.insert(q.id).second) {
            throw IngestError(src, line_no, "duplicate question id '" + q.id + "'");
        }
        out.push_back(std::move(q));
    });
    log_unknown(unknown, src);
    return out;
}

std::vector<QuestionRecord> load_questions(const std::filesystem::path& path) {
    return parse_questions(read_file(path), path.string());
}

DocCorpus parse_docs(std::string_view jsonl, const std::string& src) {
    DocCorpus corpus;
    std::set<std::string> unknown;
    for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
        json obj = parse_line(line, src, line_no);
        TopicId topic = read_topic_id(obj, src, line_no);
        auto docs_it = obj.find("docs");
        if (docs_it == obj.end() || !docs_it->is_array()) {
            throw IngestError(src, line_no, "missing required array 'docs'");
        }
        for (const auto& [key, _] : obj.items()) {
            if (!kTopicFields.contains(key)) unknown.insert(key);
        }
        if (corpus.topics.contains(topic)) {
            spdlog::warn("{}:{}: topic {} appears on more than one line; appending", src, line_no, topic);
        }
        corpus.topic_titles[topic] = read_string(obj, "topic", src, line_no, false);
        auto& docs = corpus.topics[topic];
        std::set<std::string> ids;
        for (const auto& d : docs) ids.insert(d.id);
        if (docs_it->empty()) spdlog::warn("{}:{}: topic {} has no documents", src, line_no, topic);

        for (const auto& jd : *docs_it) {
            if (!jd.is_object()) throw IngestError(src, line_no, "document entry is not an object");
            DocumentRecord d;
            d.topic_id = topic;
            d.id = read_string(jd, "id", src, line_no, true);
            d.title = read_string(jd, "title", src, line_no, false);
            d.snippet = read_string(jd, "snippet", src, line_no, false);
            d.source = read_string(jd, "source", src, line_no, false);
            d.link = read_string(jd, "link", src, line_no, false);
            d.content = read_string(jd, "content", src, line_no, false);
            for (const auto& [key, _] : jd.items()) {
                if (!kDocFields.contains(key)) unknown.insert("docs[]." + key);
            }
            if (is_blank(d.content)) {
                spdlog::warn("{}:{}: document '{}' in topic {} has empty content; skipped", src, line_no, d.id, topic);
                corpus.rejected.push_back({topic, d.id, line_no, "empty content"});
                continue;
            }
            if (!ids.insert(d.id).second) {
                spdlog::warn("{}:{}: duplicate document id '{}' in topic {}; skipped", src, line_no, d.id, topic);
                corpus.rejected.push_back({topic, d.id, line_no, "duplicate id"});
                continue;
            }
            docs.push_back(std::move(d));
        }
    });
    log_unknown(unknown, src);
    return corpus;
}

DocCorpus load_docs(const std::filesystem::path& path) { return parse_docs(read_file(path), path.string()); }

std::string question_to_json(const QuestionRecord& q) {
    json obj = {{"topic_id", q.topic_id}, {"id", q.id}, {"target_event", q.target_event}};
    for (Letter l : kAllLetters) obj[std::string("option_") + to_char(l)] = q.option(l);
    if (q.gold) obj["golden_answer"] = q.gold->to_string();
    return obj.dump();
}

std::string questions_to_jsonl(const std::vector<QuestionRecord>& qs) {
    std::string out;
    for (const auto& q : qs) {
        out += question_to_json(q);
        out.push_back('\n');
    }
    return out;
}

std::string docs_to_jsonl(const DocCorpus& corpus) {
    std::string out;
    for (const auto& [topic, docs] : corpus.topics) {
        json arr = json::array();
        for (const auto& d : docs) {
            arr.push_back({{"id", d.id}, {"title", d.title}, {"snippet", d.snippet}, {"source", d.source},
                           {"link", d.link}, {"content", d.content}});
        }
        json obj = {{"topic_id", topic}, {"docs", std::move(arr)}};
        if (auto it = corpus.topic_titles.find(topic); it != corpus.topic_titles.end()) obj["topic"] = it->second;
        out += obj.dump();
        out.push_back('\n');
    }
    return out;
}

bool detect_none_option(std::string_view option_text) {
    return normalize_text(option_text).str().starts_with("none of the");
}

std::vector<LetterSet> duplicate_classes(const QuestionRecord& q) {
    std::array<NormalizedText, 4> keys;
    for (Letter l : kAllLetters) keys[static_cast<std::size_t>(index_of(l))] = normalize_text(q.option(l));
    std::vector<LetterSet> classes;
    LetterSet assigned;
    for (Letter l : kAllLetters) {
        if (assigned.contains(l)) continue;
        LetterSet cls{l};
        for (Letter m : kAllLetters) {
            if (index_of(m) > index_of(l) && keys[static_cast<std::size_t>(index_of(m))] ==
                                                  keys[static_cast<std::size_t>(index_of(l))]) {
                cls.insert(m);
            }
        }
        assigned |= cls;
        classes.push_back(cls);
    }
    return classes;
}

std::vector<SiblingGroup> sibling_groups(const std::vector<QuestionRecord>& questions) {
    std::vector<SiblingGroup> groups;
    std::map<std::pair<TopicId, NormalizedText>, std::size_t> index;
    for (const auto& q : questions) {
        auto key = std::make_pair(q.topic_id, normalize_text(q.target_event));
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) groups.push_back({q.topic_id, key.second, {}});
        groups[it->second].question_ids.push_back(q.id);
    }
    return groups;
}

LetterSet QuestionFacts::class_of(Letter l) const {
    for (LetterSet cls : duplicate_classes) {
        if (cls.contains(l)) return cls;
    }
    return LetterSet{l};
}

CorpusFacts::CorpusFacts(std::vector<QuestionRecord> questions)
    : questions_(std::move(questions)), groups_(sibling_groups(questions_)) {
    facts_.resize(questions_.size());
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        const auto& q = questions_[i];
        if (!by_id_.emplace(q.id, i).second) {
            throw std::invalid_argument("duplicate question id '" + q.id + "'");
        }
        auto& f = facts_[i];
        for (Letter l : kAllLetters) {
            f.option_keys[static_cast<std::size_t>(index_of(l))] = normalize_text(q.option(l));
            if (f.key(l).str().starts_with("none of the")) f.none_letters.insert(l);
        }
        f.duplicate_classes = duplicate_classes(q);
    }
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        for (const auto& id : groups_[g].question_ids) facts_[by_id_.at(id)].group_index = g;
    }
}

std::optional<std::size_t> CorpusFacts::position_of(std::string_view question_id) const {
    auto it = by_id_.find(std::string(question_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

double CorpusFacts::multi_question_group_share() const {
    if (groups_.empty()) return 0.0;
    std::size_t multi = 0;
    for (const auto& g : groups_) multi += g.question_ids.size() >= 2 ? 1 : 0;
    return static_cast<double>(multi) / static_cast<double>(groups_.size());
}

}  // namespace aer
