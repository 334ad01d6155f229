#include <doctest.h>

#include <random>
#include <set>

#include "aer/corpus.hpp"
#include "aer/errors.hpp"
#include "support/test_support.hpp"

using namespace aer;
using aer::testing::make_question;

namespace {

std::string question_line(const std::string& id, int topic, const std::string& gold) {
    std::string line = R"({"topic_id":)" + std::to_string(topic) + R"(,"id":")" + id +
                       R"(","target_event":"E","option_A":"a","option_B":"b","option_C":"c","option_D":"d")";
    if (!gold.empty()) line += R"(,"golden_answer":")" + gold + "\"";
    return line + "}\n";
}

}  // namespace

TEST_CASE("letter sets parse and print canonically") {
    CHECK(LetterSet::parse("C, a").to_string() == "A,C");
    CHECK(LetterSet::parse("b d").to_string() == "B,D");
    CHECK(LetterSet::parse("").empty());
    CHECK_THROWS_AS(LetterSet::parse("A,E"), std::invalid_argument);
    CHECK(LetterSet({Letter::A, Letter::D}).size() == 2);
    for (int m = 0; m < 16; ++m) {
        auto s = LetterSet::from_mask(static_cast<std::uint8_t>(m));
        CHECK(LetterSet::parse(s.to_string()) == s);
    }
}

TEST_CASE("load_questions parses gold answers") {
    auto qs = parse_questions(question_line("q-101", 11, "A,B") + question_line("q-102", 11, "") +
                              question_line("q-103", 12, "B"));
    REQUIRE(qs.size() == 3);
    CHECK(qs[0].topic_id == 11);
    CHECK(qs[0].gold == LetterSet{Letter::A, Letter::B});
    CHECK_FALSE(qs[1].gold.has_value());
    CHECK(qs[2].gold == LetterSet{Letter::B});
}

TEST_CASE("load_questions errors carry the line number") {
    std::string text = question_line("q1", 1, "A") + "{not json\n";
    try {
        parse_questions(text, "qs.jsonl");
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("qs.jsonl:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_questions(R"({"topic_id":1,"id":"x","target_event":"E","option_A":"a"})"), IngestError);
    CHECK_THROWS_AS(parse_questions(question_line("q1", 1, "A") + question_line("q1", 1, "B")), IngestError);
    CHECK_THROWS_AS(parse_questions(question_line("q1", 1, "A,X")), IngestError);
}

TEST_CASE("unknown question fields are ignored") {
    auto qs = parse_questions(
        R"({"topic_id":1,"id":"x","target_event":"E","option_A":"a","option_B":"b","option_C":"c","option_D":"d","difficulty":"hard"})");
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].option(Letter::D) == "d");
}

TEST_CASE("load_docs keeps order, drops imageUrl and flags blank documents") {
    std::string text =
        R"({"topic_id":11,"topic":"T","docs":[{"title":"t1","id":"doc-001","link":"l","snippet":"s","source":"src","imageUrl":"http://x/img.png","content":"body one"},)"
        R"({"title":"t2","id":"doc-002","content":"   "},{"title":"t3","id":"doc-003","content":"body three"}]})"
        "\n";
    auto corpus = parse_docs(text);
    const auto& docs = corpus.docs(11);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "doc-001");
    CHECK(docs[1].id == "doc-003");
    REQUIRE(corpus.rejected.size() == 1);
    CHECK(corpus.rejected[0].id == "doc-002");
    CHECK(docs_to_jsonl(corpus).find("imageUrl") == std::string::npos);
    CHECK(corpus.docs(99).empty());

    CHECK_THROWS_AS(parse_docs(R"({"topic_id":1,"topic":"T"})"), IngestError);
    auto empty = parse_docs(R"({"topic_id":5,"topic":"T","docs":[]})");
    CHECK(empty.topics.contains(5));
    CHECK(empty.document_count() == 0);
}

TEST_CASE("normalize_text") {
    CHECK(normalize_text("OpenAI  releases ChatGPT.").str() == "openai releases chatgpt");
    CHECK(normalize_text("").str().empty());
    CHECK(normalize_text("  Tabs\tand\nnewlines  ").str() == "tabs and newlines");

    // U+00E9 precomposed vs e + U+0301 combining acute.
    std::string composed = "Caf\xC3\xA9 opened";
    std::string decomposed = "Cafe\xCC\x81 opened";
    REQUIRE(composed != decomposed);
    CHECK(normalize_text(composed) == normalize_text(decomposed));
}

TEST_CASE("normalize_text is idempotent on random strings") {
    std::mt19937 rng(42);
    const std::vector<std::string> pieces = {"a", "B", " ", "  ", "\t", ".", "!", "?", "\xC3\xA9", "e\xCC\x81",
                                             "\xC3\x9F", "Z", "1", ",", "\xCE\xA3"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(0, 20);
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (std::size_t n = len(rng); n > 0; --n) s += pieces[pick(rng)];
        auto once = normalize_text(s);
        CHECK(normalize_text(once.str()) == once);
    }
}

TEST_CASE("detect_none_option") {
    CHECK(detect_none_option("None of the others are correct causes."));
    CHECK_FALSE(detect_none_option("OpenAI released ChatGPT Plus..."));
    CHECK(detect_none_option("none of the causes is correct"));
    CHECK_FALSE(detect_none_option("Nonetheless, prices rose."));
}

TEST_CASE("duplicate_classes") {
    using L = Letter;
    auto distinct = make_question("q", 1, "E", "a", "b", "c", "d");
    CHECK(duplicate_classes(distinct) == std::vector<LetterSet>{{L::A}, {L::B}, {L::C}, {L::D}});
    auto bd = make_question("q", 1, "E", "a", "Same text.", "c", "same  TEXT");
    CHECK(duplicate_classes(bd) == std::vector<LetterSet>{{L::A}, {L::B, L::D}, {L::C}});
    auto triple = make_question("q", 1, "E", "x", "x", "x", "d");
    CHECK(duplicate_classes(triple) == std::vector<LetterSet>{{L::A, L::B, L::C}, {L::D}});
}

TEST_CASE("duplicate_classes is a partition") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> pick(0, 2);
    const std::array<std::string, 3> texts = {"alpha", "beta", "gamma"};
    for (int i = 0; i < 200; ++i) {
        auto q = make_question("q", 1, "E", texts[pick(rng)], texts[pick(rng)], texts[pick(rng)], texts[pick(rng)]);
        LetterSet seen;
        for (LetterSet cls : duplicate_classes(q)) {
            CHECK_FALSE(cls.empty());
            CHECK_FALSE(cls.intersects(seen));
            seen |= cls;
        }
        CHECK(seen == LetterSet::all());
    }
}

TEST_CASE("sibling_groups") {
    auto a = make_question("a", 1, "The Dam broke.", "a", "b", "c", "d");
    auto b = make_question("b", 1, "the dam BROKE", "a", "b", "c", "d");
    auto c = make_question("c", 2, "The Dam broke.", "a", "b", "c", "d");
    auto groups = sibling_groups({a, b, c});
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].question_ids == std::vector<std::string>{"a", "b"});
    CHECK(groups[1].question_ids == std::vector<std::string>{"c"});

    CorpusFacts facts({a, b, c});
    CHECK(facts.multi_question_group_share() == doctest::Approx(0.5));
}

TEST_CASE("every question lands in exactly one sibling group") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> topic(1, 4), event(0, 5);
    std::vector<QuestionRecord> qs;
    for (int i = 0; i < 120; ++i) {
        qs.push_back(make_question("q" + std::to_string(i), topic(rng), "Event " + std::to_string(event(rng)), "a", "b",
                                   "c", "d"));
    }
    std::multiset<std::string> seen;
    for (const auto& g : sibling_groups(qs)) seen.insert(g.question_ids.begin(), g.question_ids.end());
    CHECK(seen.size() == qs.size());
    for (const auto& q : qs) CHECK(seen.count(q.id) == 1);
}

TEST_CASE("question facts record None letters and duplicate classes") {
    auto q = make_question("q", 1, "E", "x", "y", "x", aer::testing::kNoneText);
    CorpusFacts facts({q});
    const auto& f = facts.facts(0);
    CHECK(f.none_letters == LetterSet{Letter::D});
    CHECK(f.class_of(Letter::C) == LetterSet{Letter::A, Letter::C});
    CHECK(f.substantive_letters() == LetterSet{Letter::A, Letter::B, Letter::C});
    CHECK(facts.position_of("q") == 0u);
    CHECK_FALSE(facts.position_of("missing").has_value());
}

TEST_CASE("questions and docs round-trip through JSONL") {
    auto qs = load_questions(aer::testing::fixture("toy/questions.jsonl"));
    CHECK(parse_questions(questions_to_jsonl(qs)) == qs);

    auto corpus = load_docs(aer::testing::fixture("toy/docs.jsonl"));
    auto again = parse_docs(docs_to_jsonl(corpus));
    CHECK(again.topics == corpus.topics);
    CHECK(again.topic_titles == corpus.topic_titles);
    CHECK(corpus.topics.size() == 3);
    CHECK(corpus.document_count() == 14);
}
