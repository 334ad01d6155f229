#include "aer/lexindex.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "aer/errors.hpp"

namespace aer {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

constexpr std::array<std::string_view, 54> kStopwords = {
    "a",    "about", "after", "all",   "also",  "an",    "and",   "are",  "as",    "at",    "be",
    "been", "but",   "by",    "can",   "for",   "from",  "had",   "has",  "have",  "he",    "her",
    "his",  "i",     "if",    "in",    "into",  "is",    "it",    "its",  "more",  "not",   "of",
    "on",   "or",    "our",   "she",   "so",    "than",  "that",  "the",  "their", "there", "these",
    "they", "this",  "to",    "was",   "we",    "were",  "which", "while", "with", "would"};
static_assert(std::is_sorted(kStopwords.begin(), kStopwords.end()));

struct Span {
    std::size_t begin;
    std::size_t end;
};

std::vector<Span> token_spans(std::string_view text) {
    std::vector<Span> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) spans.push_back({start, i});
    }
    return spans;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

double term_weight(const std::string& term, const LexIndex& index, const Bm25Params& params,
                   const EntitySet& entities) {
    double boost = entities.contains(term) ? params.entity_boost : 1.0;
    return index.idf(term) * boost;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const Span& s : token_spans(text)) out.push_back(lower(text.substr(s.begin, s.end - s.begin)));
    return out;
}

bool is_stopword(std::string_view token) {
    return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

void Bm25Params::validate() const {
    if (!(k1 >= 0.0)) throw std::invalid_argument("bm25: k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bm25: b must lie in [0,1]");
    if (!(delta >= 0.0)) throw std::invalid_argument("bm25: delta must be >= 0");
    if (!(entity_boost >= 1.0)) throw std::invalid_argument("bm25: entity_boost must be >= 1");
}

EntitySet CapitalizationEntityRecognizer::extract(std::span<const DocumentRecord> docs) const {
    EntitySet out;
    for (const auto& doc : docs) {
        std::string_view text = doc.content;
        std::size_t prev_end = 0;
        bool first = true;
        for (const Span& s : token_spans(text)) {
            std::string_view gap = text.substr(prev_end, s.begin - prev_end);
            bool sentence_initial = first || gap.find_first_of(".!?") != std::string_view::npos;
            first = false;
            prev_end = s.end;
            char head = text[s.begin];
            if (sentence_initial || head < 'A' || head > 'Z') continue;
            std::string token = lower(text.substr(s.begin, s.end - s.begin));
            if (!is_stopword(token)) out.insert(std::move(token));
        }
    }
    return out;
}

EntitySet extract_entities(std::span<const DocumentRecord> docs) {
    return CapitalizationEntityRecognizer{}.extract(docs);
}

LexIndex::LexIndex(std::vector<Entry> docs) {
    ids_.reserve(docs.size());
    tfs_.reserve(docs.size());
    lengths_.reserve(docs.size());
    std::size_t total = 0;
    for (auto& d : docs) {
        if (!positions_.emplace(d.id, ids_.size()).second) {
            throw std::invalid_argument("lexindex: duplicate document id '" + d.id + "'");
        }
        std::unordered_map<std::string, std::size_t> counts;
        for (auto& t : d.tokens) ++counts[t];
        for (const auto& [term, _] : counts) ++df_[term];
        lengths_.push_back(d.tokens.size());
        total += d.tokens.size();
        tfs_.push_back(std::move(counts));
        ids_.push_back(std::move(d.id));
    }
    avgdl_ = ids_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(ids_.size());
}

LexIndex LexIndex::from_documents(std::span<const DocumentRecord> docs) {
    std::vector<Entry> entries;
    entries.reserve(docs.size());
    for (const auto& d : docs) entries.push_back({d.id, tokenize(d.title + " " + d.content)});
    return LexIndex(std::move(entries));
}

std::size_t LexIndex::df(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
}

std::size_t LexIndex::tf(std::size_t doc, const std::string& term) const {
    const auto& counts = tfs_.at(doc);
    auto it = counts.find(term);
    return it == counts.end() ? 0 : it->second;
}

std::size_t LexIndex::position(std::string_view doc_id) const {
    auto it = positions_.find(std::string(doc_id));
    if (it == positions_.end()) {
        throw IndexMismatchError("lexindex: document '" + std::string(doc_id) + "' is not indexed");
    }
    return it->second;
}

bool LexIndex::contains(std::string_view doc_id) const { return positions_.contains(std::string(doc_id)); }

double LexIndex::idf(const std::string& term) const {
    double n = static_cast<double>(doc_count());
    double d = static_cast<double>(df(term));
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double bm25_plus_at(std::span<const std::string> query_terms, std::size_t doc, const LexIndex& index,
                    const Bm25Params& params, const EntitySet& entities) {
    double dl = static_cast<double>(index.doc_length(doc));
    double avgdl = index.avgdl() > 0.0 ? index.avgdl() : 1.0;
    double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
    double score = 0.0;
    for (const auto& term : query_terms) {
        if (!index.in_vocabulary(term)) continue;
        double tf = static_cast<double>(index.tf(doc, term));
        double saturation = tf > 0.0 ? tf * (params.k1 + 1.0) / (tf + norm) : 0.0;
        score += term_weight(term, index, params, entities) * (saturation + params.delta);
    }
    return score;
}

double bm25_plus(std::span<const std::string> query_terms, std::string_view doc_id, const LexIndex& index,
                 const Bm25Params& params, const EntitySet& entities) {
    return bm25_plus_at(query_terms, index.position(doc_id), index, params, entities);
}

double bm25_plus_floor(std::span<const std::string> query_terms, const LexIndex& index, const Bm25Params& params,
                       const EntitySet& entities) {
    double floor = 0.0;
    for (const auto& term : query_terms) {
        if (index.in_vocabulary(term)) floor += term_weight(term, index, params, entities) * params.delta;
    }
    return floor;
}

std::vector<std::string> top_terms(std::size_t doc, const LexIndex& index, std::size_t k) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [term, tf] : index.term_counts(doc)) {
        ranked.emplace_back(static_cast<double>(tf) * index.idf(term), term);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (ranked.size() > k) ranked.resize(k);
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (auto& [_, term] : ranked) out.push_back(std::move(term));
    return out;
}

namespace {

struct DocQuery {
    std::vector<std::string> terms;
    double floor = 0.0;
    double self_gain = 0.0;
};

DocQuery make_doc_query(std::size_t doc, const LexIndex& index, const Bm25Params& params,
                        const EntitySet& entities) {
    DocQuery q;
    q.terms = top_terms(doc, index);
    q.floor = bm25_plus_floor(q.terms, index, params, entities);
    q.self_gain = bm25_plus_at(q.terms, doc, index, params, entities) - q.floor;
    return q;
}

double directed(const DocQuery& q, std::size_t target, const LexIndex& index, const Bm25Params& params,
                const EntitySet& entities) {
    double gain = bm25_plus_at(q.terms, target, index, params, entities) - q.floor;
    return gain / q.self_gain;
}

double combine(const DocQuery& qa, std::size_t a, const DocQuery& qb, std::size_t b, const LexIndex& index,
               const Bm25Params& params, const EntitySet& entities) {
    if (qa.self_gain <= 0.0 || qb.self_gain <= 0.0) return 0.0;
    double sim = (directed(qa, b, index, params, entities) + directed(qb, a, index, params, entities)) / 2.0;
    return std::clamp(sim, 0.0, 1.0);
}

}  // namespace

double lexical_similarity(std::string_view doc_a, std::string_view doc_b, const LexIndex& index,
                          const Bm25Params& params, const EntitySet& entities) {
    std::size_t a = index.position(doc_a);
    std::size_t b = index.position(doc_b);
    // Order the pair so the floating-point sum is identical for (a,b) and (b,a).
    if (b < a) std::swap(a, b);
    DocQuery qa = make_doc_query(a, index, params, entities);
    DocQuery qb = make_doc_query(b, index, params, entities);
    return combine(qa, a, qb, b, index, params, entities);
}

std::vector<double> lexical_similarity_matrix(const LexIndex& index, const Bm25Params& params,
                                              const EntitySet& entities) {
    std::size_t n = index.doc_count();
    std::vector<DocQuery> queries;
    queries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) queries.push_back(make_doc_query(i, index, params, entities));
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m[i * n + i] = queries[i].self_gain > 0.0 ? 1.0 : 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = combine(queries[i], i, queries[j], j, index, params, entities);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    return m;
}

}  // namespace aer
