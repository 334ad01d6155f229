#pragma once

// Scoring and analysis: the partial-credit metric, cardinality breakdowns,
// inter-model agreement, the per-question oracle and selection bias.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aer/corpus.hpp"
#include "aer/letters.hpp"

namespace aer {

/// Predictions keyed by question id.
using PredictionMap = std::map<std::string, LetterSet>;
/// Predictions in file order.
using PredictionList = std::vector<std::pair<std::string, LetterSet>>;

/// Reads {id, prediction:"A,C"} lines. Throws IngestError on malformed
/// lines, bad letters or duplicate ids.
PredictionList parse_predictions(std::string_view jsonl, const std::string& source_name = "<memory>");
PredictionList load_predictions(const std::filesystem::path& path);
std::string predictions_to_jsonl(const PredictionList& preds);
PredictionMap to_map(const PredictionList& preds);

/// 1.0 on an exact match, 0.5 when `pred` is a non-empty proper subset of
/// `gold`, 0.0 otherwise. Throws std::invalid_argument on an empty gold set.
double score_question(LetterSet pred, LetterSet gold);

struct QuestionScore {
    std::string id;
    double score = 0.0;
    bool missing = false;
    std::size_t gold_size = 0;
};

struct CardinalitySlice {
    std::size_t count = 0;
    double mean = 0.0;
    double exact_rate = 0.0;
};

struct ScoreReport {
    std::vector<QuestionScore> questions;  // gold order
    double mean = 0.0;
    std::size_t exact = 0;
    std::size_t partial = 0;
    std::size_t zero = 0;
    std::vector<std::string> missing;  // gold questions without a prediction
    std::vector<std::string> extra;    // predictions without a gold question
    CardinalitySlice single;           // |gold| = 1
    CardinalitySlice multi;            // |gold| > 1
    double gap = 0.0;                  // single.mean - multi.mean
};

/// Scores every gold-labelled question. Questions without gold are skipped.
ScoreReport score_run(const PredictionMap& preds, std::span<const QuestionRecord> gold);

std::string score_report_json(const ScoreReport& r);

/// Ratings as raters x items; nullopt marks a missing prediction.
using RatingTable = std::vector<std::vector<std::optional<LetterSet>>>;

/// Fleiss' kappa with the canonical letter-set string as the category.
/// Items missing any rating are dropped. Requires >= 2 raters and >= 2
/// complete items (std::invalid_argument otherwise).
double fleiss_kappa(const RatingTable& ratings);

/// Cohen's kappa over set-valued categories; items missing either rating are dropped.
double cohen_kappa(std::span<const std::optional<LetterSet>> a, std::span<const std::optional<LetterSet>> b);

/// Symmetric raters x raters matrix with unit diagonal.
std::vector<std::vector<double>> pairwise_cohen(const RatingTable& ratings);

enum class SetDistance { Nominal, Jaccard };
double set_distance(LetterSet a, LetterSet b, SetDistance d);

/// Krippendorff's alpha, 1 - D_o / D_e, over items with at least two
/// ratings. When D_e = 0 the result is 1 if D_o = 0; otherwise
/// std::domain_error is thrown.
double krippendorff_alpha(const RatingTable& ratings, SetDistance distance);

struct AgreementReport {
    std::vector<std::string> raters;
    double fleiss_kappa = 0.0;
    double alpha_nominal = 0.0;
    double alpha_jaccard = 0.0;
    std::vector<std::vector<double>> cohen;
    double unanimous_rate = 0.0;  // items where every rater gave the same set
    double majority_rate = 0.0;   // items where a strict majority gave the same set
    std::map<TopicId, double> per_topic_fleiss;  // topics with >= 2 complete items
};

/// `model_preds` are parallel to `raters`; items are `questions` in order.
AgreementReport agreement(const std::vector<std::string>& raters, const std::vector<PredictionMap>& model_preds,
                          std::span<const QuestionRecord> questions);
std::string agreement_report_json(const AgreementReport& r);

struct OracleEntry {
    std::string id;
    std::string best_model;
    double score = 0.0;
};

struct OracleReport {
    std::vector<OracleEntry> questions;
    double mean = 0.0;
};

/// Per question, the best score any model achieves (first model wins ties).
OracleReport oracle(const std::vector<std::string>& models, const std::vector<PredictionMap>& model_preds,
                    std::span<const QuestionRecord> gold);

struct BiasReport {
    std::size_t questions = 0;  // (model, question) pairs considered
    std::size_t under_selection = 0;
    std::size_t over_selection = 0;
    std::size_t under_letters = 0;
    std::size_t over_letters = 0;
    double mean_pred_cardinality = 0.0;
    double mean_gold_cardinality = 0.0;
};

using QuestionFilter = std::function<bool(const QuestionRecord&)>;

/// Counts under-selection (a gold letter missed) and over-selection (a
/// non-gold letter chosen) once per (model, question); the *_letters
/// fields count individual letters. Missing predictions are skipped.
BiasReport bias_stats(const std::vector<PredictionMap>& model_preds, std::span<const QuestionRecord> gold,
                      const QuestionFilter& filter = {});

}  // namespace aer
