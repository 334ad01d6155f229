#pragma once

// Sparse lexical machinery: tokenization, BM25+ with entity boosting, and
// document-document lexical similarity used for graph edges.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "aer/corpus.hpp"

namespace aer {

/// Lower-case word tokens split on ASCII non-alphanumerics. Bytes >= 0x80
/// (UTF-8 sequences) are treated as word characters and kept verbatim.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    double delta = 1.0;
    double entity_boost = 3.0;

    void validate() const;  // throws std::invalid_argument
};

/// Terms flagged as entity-like; their BM25+ contribution is multiplied by
/// Bm25Params::entity_boost.
using EntitySet = std::unordered_set<std::string>;

class EntityRecognizer {
public:
    virtual ~EntityRecognizer() = default;
    virtual EntitySet extract(std::span<const DocumentRecord> docs) const = 0;
};

/// A token is entity-like when some occurrence in document content starts
/// with an upper-case letter outside sentence-initial position and the
/// token is not a stopword.
class CapitalizationEntityRecognizer final : public EntityRecognizer {
public:
    EntitySet extract(std::span<const DocumentRecord> docs) const override;
};

EntitySet extract_entities(std::span<const DocumentRecord> docs);

bool is_stopword(std::string_view token);

/// Immutable inverted statistics over a fixed document set.
class LexIndex {
public:
    struct Entry {
        std::string id;
        std::vector<std::string> tokens;
    };

    /// Indexes pre-tokenized documents. Ids must be unique.
    explicit LexIndex(std::vector<Entry> docs);

    /// Indexes `title + " " + content` of each document.
    static LexIndex from_documents(std::span<const DocumentRecord> docs);

    std::size_t doc_count() const { return ids_.size(); }
    double avgdl() const { return avgdl_; }
    std::size_t df(const std::string& term) const;
    std::size_t tf(std::size_t doc, const std::string& term) const;
    std::size_t doc_length(std::size_t doc) const { return lengths_[doc]; }
    const std::string& doc_id(std::size_t doc) const { return ids_[doc]; }
    bool in_vocabulary(const std::string& term) const { return df_.contains(term); }
    const std::unordered_map<std::string, std::size_t>& term_counts(std::size_t doc) const { return tfs_[doc]; }

    /// Throws IndexMismatchError for an unknown id.
    std::size_t position(std::string_view doc_id) const;
    bool contains(std::string_view doc_id) const;

    /// ln((N - df + 0.5) / (df + 0.5) + 1)
    double idf(const std::string& term) const;

private:
    std::vector<std::string> ids_;
    std::vector<std::unordered_map<std::string, std::size_t>> tfs_;
    std::vector<std::size_t> lengths_;
    std::unordered_map<std::string, std::size_t> df_;
    std::unordered_map<std::string, std::size_t> positions_;
    double avgdl_ = 0.0;
};

/// BM25+ with a score-time entity multiplier. Query terms are summed as a
/// list (repeats count). Terms absent from the document but present in the
/// vocabulary contribute idf * boost * delta; out-of-vocabulary terms add 0.
double bm25_plus(std::span<const std::string> query_terms, std::string_view doc_id, const LexIndex& index,
                 const Bm25Params& params, const EntitySet& entities);
double bm25_plus_at(std::span<const std::string> query_terms, std::size_t doc, const LexIndex& index,
                    const Bm25Params& params, const EntitySet& entities);

/// The score any document containing none of the query terms receives:
/// sum of idf * boost * delta over in-vocabulary terms.
double bm25_plus_floor(std::span<const std::string> query_terms, const LexIndex& index, const Bm25Params& params,
                       const EntitySet& entities);

/// Top-`k` distinct terms of a document ranked by tf * idf (ties by term).
std::vector<std::string> top_terms(std::size_t doc, const LexIndex& index, std::size_t k = 20);

/// Symmetric document-document similarity in [0,1]. Each document queries
/// the other with its top-20 terms; the matched-term gain (score above the
/// no-match floor) is normalized by the document's gain against itself and
/// the two directions are averaged.
double lexical_similarity(std::string_view doc_a, std::string_view doc_b, const LexIndex& index,
                          const Bm25Params& params, const EntitySet& entities);

/// All-pairs lexical similarity, row-major n x n, computed with each
/// document's query terms and self-gain cached.
std::vector<double> lexical_similarity_matrix(const LexIndex& index, const Bm25Params& params,
                                              const EntitySet& entities);

}  // namespace aer
