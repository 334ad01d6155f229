#include "aer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aer/errors.hpp"

namespace aer {

using json = nlohmann::json;

PredictionList parse_predictions(std::string_view jsonl, const std::string& source_name) {
    PredictionList out;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            json row = json::parse(line);
            auto id = row.at("id").get<std::string>();
            LetterSet letters;
            const auto& p = row.at("prediction");
            if (p.is_array()) {
                for (const auto& l : p) letters |= LetterSet::parse(l.get<std::string>());
            } else {
                letters = LetterSet::parse(p.get<std::string>());
            }
            if (!seen.insert(id).second) throw IngestError(source_name, line_no, "duplicate prediction id '" + id + "'");
            out.emplace_back(std::move(id), letters);
        } catch (const IngestError&) {
            throw;
        } catch (const std::exception& e) {
            throw IngestError(source_name, line_no, e.what());
        }
    }
    return out;
}

PredictionList load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError(path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_predictions(buf.str(), path.string());
}

std::string predictions_to_jsonl(const PredictionList& preds) {
    std::string out;
    for (const auto& [id, letters] : preds) out += json{{"id", id}, {"prediction", letters.to_string()}}.dump() + "\n";
    return out;
}

PredictionMap to_map(const PredictionList& preds) { return {preds.begin(), preds.end()}; }

double score_question(LetterSet pred, LetterSet gold) {
    if (gold.empty()) throw std::invalid_argument("score_question: empty gold set");
    if (pred == gold) return 1.0;
    if (!pred.empty() && pred.is_subset_of(gold)) return 0.5;
    return 0.0;
}

ScoreReport score_run(const PredictionMap& preds, std::span<const QuestionRecord> gold) {
    ScoreReport r;
    std::set<std::string> gold_ids;
    double single_sum = 0.0, multi_sum = 0.0;
    std::size_t single_exact = 0, multi_exact = 0;
    for (const auto& q : gold) {
        if (!q.gold) continue;
        gold_ids.insert(q.id);
        QuestionScore s{q.id, 0.0, false, static_cast<std::size_t>(q.gold->size())};
        auto it = preds.find(q.id);
        if (it == preds.end()) {
            s.missing = true;
            r.missing.push_back(q.id);
        } else {
            s.score = score_question(it->second, *q.gold);
        }
        if (s.score == 1.0) {
            ++r.exact;
        } else if (s.score == 0.5) {
            ++r.partial;
        } else {
            ++r.zero;
        }
        if (s.gold_size == 1) {
            ++r.single.count;
            single_sum += s.score;
            single_exact += s.score == 1.0 ? 1 : 0;
        } else {
            ++r.multi.count;
            multi_sum += s.score;
            multi_exact += s.score == 1.0 ? 1 : 0;
        }
        r.mean += s.score;
        r.questions.push_back(std::move(s));
    }
    for (const auto& [id, _] : preds) {
        if (!gold_ids.contains(id)) r.extra.push_back(id);
    }
    if (!r.questions.empty()) r.mean /= static_cast<double>(r.questions.size());
    auto finish = [](CardinalitySlice& s, double sum, std::size_t exact) {
        if (s.count == 0) return;
        s.mean = sum / static_cast<double>(s.count);
        s.exact_rate = static_cast<double>(exact) / static_cast<double>(s.count);
    };
    finish(r.single, single_sum, single_exact);
    finish(r.multi, multi_sum, multi_exact);
    r.gap = r.single.mean - r.multi.mean;
    return r;
}

std::string score_report_json(const ScoreReport& r) {
    auto slice = [](const CardinalitySlice& s) {
        return json{{"count", s.count}, {"mean", s.mean}, {"exact_rate", s.exact_rate}};
    };
    json per = json::array();
    for (const auto& q : r.questions) {
        json row = {{"id", q.id}, {"score", q.score}};
        if (q.missing) row["missing"] = true;
        per.push_back(std::move(row));
    }
    json obj = {{"mean", r.mean},
                {"count", r.questions.size()},
                {"exact", r.exact},
                {"partial", r.partial},
                {"zero", r.zero},
                {"missing", r.missing},
                {"extra", r.extra},
                {"single", slice(r.single)},
                {"multi", slice(r.multi)},
                {"gap", r.gap},
                {"questions", per}};
    return obj.dump(2);
}

namespace {

std::vector<std::size_t> complete_items(const RatingTable& ratings) {
    std::vector<std::size_t> out;
    if (ratings.empty()) return out;
    std::size_t items = ratings.front().size();
    for (const auto& row : ratings) {
        if (row.size() != items) throw std::invalid_argument("rating table rows differ in length");
    }
    for (std::size_t i = 0; i < items; ++i) {
        bool ok = std::all_of(ratings.begin(), ratings.end(), [i](const auto& row) { return row[i].has_value(); });
        if (ok) out.push_back(i);
    }
    return out;
}

}  // namespace

double fleiss_kappa(const RatingTable& ratings) {
    if (ratings.size() < 2) throw std::invalid_argument("fleiss_kappa: need at least two raters");
    auto items = complete_items(ratings);
    if (items.size() < 2) throw std::invalid_argument("fleiss_kappa: need at least two complete items");
    double n = static_cast<double>(ratings.size());
    double big_n = static_cast<double>(items.size());
    std::array<double, 16> category_totals{};
    double p_bar = 0.0;
    for (std::size_t i : items) {
        std::array<double, 16> counts{};
        for (const auto& row : ratings) counts[row[i]->mask()] += 1.0;
        double sq = 0.0;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            sq += counts[c] * counts[c];
            category_totals[c] += counts[c];
        }
        p_bar += (sq - n) / (n * (n - 1.0));
    }
    p_bar /= big_n;
    double p_e = 0.0;
    for (double t : category_totals) {
        double p = t / (big_n * n);
        p_e += p * p;
    }
    if (1.0 - p_e <= 1e-15) return 1.0;
    return (p_bar - p_e) / (1.0 - p_e);
}

double cohen_kappa(std::span<const std::optional<LetterSet>> a, std::span<const std::optional<LetterSet>> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cohen_kappa: rater lengths differ");
    std::array<double, 16> ma{}, mb{};
    double agree = 0.0, n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i] || !b[i]) continue;
        n += 1.0;
        ma[a[i]->mask()] += 1.0;
        mb[b[i]->mask()] += 1.0;
        if (*a[i] == *b[i]) agree += 1.0;
    }
    if (n == 0.0) throw std::invalid_argument("cohen_kappa: no items rated by both raters");
    double p_o = agree / n;
    double p_e = 0.0;
    for (std::size_t c = 0; c < 16; ++c) p_e += (ma[c] / n) * (mb[c] / n);
    if (1.0 - p_e <= 1e-15) return 1.0;
    return (p_o - p_e) / (1.0 - p_e);
}

std::vector<std::vector<double>> pairwise_cohen(const RatingTable& ratings) {
    std::size_t r = ratings.size();
    std::vector<std::vector<double>> m(r, std::vector<double>(r, 1.0));
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = i + 1; j < r; ++j) {
            double k = cohen_kappa(ratings[i], ratings[j]);
            m[i][j] = k;
            m[j][i] = k;
        }
    }
    return m;
}

double set_distance(LetterSet a, LetterSet b, SetDistance d) {
    if (d == SetDistance::Nominal) return a == b ? 0.0 : 1.0;
    int uni = (a | b).size();
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>((a & b).size()) / static_cast<double>(uni);
}

double krippendorff_alpha(const RatingTable& ratings, SetDistance distance) {
    if (ratings.size() < 2) throw std::invalid_argument("krippendorff_alpha: need at least two raters");
    std::size_t items = ratings.front().size();
    for (const auto& row : ratings) {
        if (row.size() != items) throw std::invalid_argument("rating table rows differ in length");
    }
    // Distances depend only on the 16 possible sets, so work with value counts.
    std::array<double, 16> totals{};
    double n = 0.0;
    double d_o = 0.0;
    for (std::size_t i = 0; i < items; ++i) {
        std::array<double, 16> counts{};
        double m = 0.0;
        for (const auto& row : ratings) {
            if (row[i]) {
                counts[row[i]->mask()] += 1.0;
                m += 1.0;
            }
        }
        if (m < 2.0) continue;
        double unit = 0.0;
        for (std::uint8_t c = 0; c < 16; ++c) {
            if (counts[c] == 0.0) continue;
            for (std::uint8_t k = 0; k < 16; ++k) {
                if (counts[k] == 0.0 || c == k) continue;
                unit += counts[c] * counts[k] *
                        set_distance(LetterSet::from_mask(c), LetterSet::from_mask(k), distance);
            }
        }
        d_o += unit / (m - 1.0);
        n += m;
        for (std::size_t c = 0; c < 16; ++c) totals[c] += counts[c];
    }
    if (n < 2.0) throw std::invalid_argument("krippendorff_alpha: fewer than two pairable values");
    d_o /= n;
    double d_e = 0.0;
    for (std::uint8_t c = 0; c < 16; ++c) {
        for (std::uint8_t k = 0; k < 16; ++k) {
            if (c == k) continue;
            d_e += totals[c] * totals[k] * set_distance(LetterSet::from_mask(c), LetterSet::from_mask(k), distance);
        }
    }
    d_e /= n * (n - 1.0);
    if (d_e == 0.0) {
        if (d_o == 0.0) return 1.0;
        throw std::domain_error("krippendorff_alpha: expected disagreement is zero");
    }
    return 1.0 - d_o / d_e;
}

namespace {

RatingTable build_table(const std::vector<PredictionMap>& model_preds, std::span<const QuestionRecord> questions) {
    RatingTable table;
    for (const auto& preds : model_preds) {
        std::vector<std::optional<LetterSet>> row;
        row.reserve(questions.size());
        for (const auto& q : questions) {
            auto it = preds.find(q.id);
            row.push_back(it == preds.end() ? std::nullopt : std::optional<LetterSet>(it->second));
        }
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace

AgreementReport agreement(const std::vector<std::string>& raters, const std::vector<PredictionMap>& model_preds,
                          std::span<const QuestionRecord> questions) {
    if (raters.size() != model_preds.size()) throw std::invalid_argument("agreement: rater names and predictions differ");
    AgreementReport r;
    r.raters = raters;
    RatingTable table = build_table(model_preds, questions);
    r.fleiss_kappa = fleiss_kappa(table);
    r.alpha_nominal = krippendorff_alpha(table, SetDistance::Nominal);
    r.alpha_jaccard = krippendorff_alpha(table, SetDistance::Jaccard);
    r.cohen = pairwise_cohen(table);

    auto items = complete_items(table);
    std::size_t unanimous = 0, majority = 0;
    for (std::size_t i : items) {
        std::array<std::size_t, 16> counts{};
        for (const auto& row : table) ++counts[row[i]->mask()];
        std::size_t top = *std::max_element(counts.begin(), counts.end());
        unanimous += top == table.size() ? 1 : 0;
        majority += 2 * top > table.size() ? 1 : 0;
    }
    if (!items.empty()) {
        r.unanimous_rate = static_cast<double>(unanimous) / static_cast<double>(items.size());
        r.majority_rate = static_cast<double>(majority) / static_cast<double>(items.size());
    }

    std::map<TopicId, std::vector<QuestionRecord>> by_topic;
    for (const auto& q : questions) by_topic[q.topic_id].push_back(q);
    for (const auto& [topic, qs] : by_topic) {
        RatingTable t = build_table(model_preds, qs);
        if (complete_items(t).size() >= 2) r.per_topic_fleiss[topic] = fleiss_kappa(t);
    }
    return r;
}

std::string agreement_report_json(const AgreementReport& r) {
    json topics = json::object();
    for (const auto& [t, k] : r.per_topic_fleiss) topics[std::to_string(t)] = k;
    json obj = {{"raters", r.raters},
                {"fleiss_kappa", r.fleiss_kappa},
                {"krippendorff_alpha_nominal", r.alpha_nominal},
                {"krippendorff_alpha_jaccard", r.alpha_jaccard},
                {"pairwise_cohen", r.cohen},
                {"unanimous_rate", r.unanimous_rate},
                {"majority_rate", r.majority_rate},
                {"per_topic_fleiss", topics}};
    return obj.dump(2);
}

OracleReport oracle(const std::vector<std::string>& models, const std::vector<PredictionMap>& model_preds,
                    std::span<const QuestionRecord> gold) {
    if (models.empty() || models.size() != model_preds.size()) {
        throw std::invalid_argument("oracle: need at least one model with predictions");
    }
    OracleReport r;
    for (const auto& q : gold) {
        if (!q.gold) continue;
        OracleEntry e{q.id, models.front(), -1.0};
        for (std::size_t m = 0; m < models.size(); ++m) {
            auto it = model_preds[m].find(q.id);
            double s = it == model_preds[m].end() ? 0.0 : score_question(it->second, *q.gold);
            if (s > e.score) {
                e.score = s;
                e.best_model = models[m];
            }
        }
        r.mean += e.score;
        r.questions.push_back(std::move(e));
    }
    if (!r.questions.empty()) r.mean /= static_cast<double>(r.questions.size());
    return r;
}

BiasReport bias_stats(const std::vector<PredictionMap>& model_preds, std::span<const QuestionRecord> gold,
                      const QuestionFilter& filter) {
    BiasReport r;
    double pred_card = 0.0, gold_card = 0.0;
    for (const auto& preds : model_preds) {
        for (const auto& q : gold) {
            if (!q.gold || (filter && !filter(q))) continue;
            auto it = preds.find(q.id);
            if (it == preds.end()) continue;
            LetterSet p = it->second;
            LetterSet g = *q.gold;
            ++r.questions;
            std::size_t missed = static_cast<std::size_t>((g - p).size());
            std::size_t extra = static_cast<std::size_t>((p - g).size());
            r.under_selection += missed > 0 ? 1 : 0;
            r.over_selection += extra > 0 ? 1 : 0;
            r.under_letters += missed;
            r.over_letters += extra;
            pred_card += p.size();
            gold_card += g.size();
        }
    }
    if (r.questions > 0) {
        r.mean_pred_cardinality = pred_card / static_cast<double>(r.questions);
        r.mean_gold_cardinality = gold_card / static_cast<double>(r.questions);
    }
    return r;
}

}  // namespace aer
