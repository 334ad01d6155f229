#include "aer/consist.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <json.hpp>
#include <set>

namespace aer {

using json = nlohmann::json;

const char* to_string(Truth t) {
    switch (t) {
        case Truth::Unknown: return "unknown";
        case Truth::True: return "true";
        case Truth::False: return "false";
    }
    return "unknown";
}

const char* to_string(Rule r) {
    static constexpr std::array<const char*, kRuleCount> names = {"R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8"};
    return names[static_cast<std::size_t>(r)];
}

Truth TruthAssignment::get(std::size_t group, const NormalizedText& text) const {
    const auto& g = groups_.at(group);
    auto it = g.find(text);
    return it == g.end() ? Truth::Unknown : it->second;
}

bool TruthAssignment::set(std::size_t group, const NormalizedText& text, Truth value) {
    auto& slot = groups_.at(group)[text];
    if (slot != Truth::Unknown && slot != value) return false;
    slot = value;
    return true;
}

namespace {

bool none_only(const QuestionFacts& f, LetterSet pred) { return !pred.empty() && pred.is_subset_of(f.none_letters); }

std::vector<std::size_t> group_members(const CorpusFacts& facts, std::size_t g) {
    std::vector<std::size_t> out;
    for (const auto& id : facts.groups()[g].question_ids) out.push_back(*facts.position_of(id));
    return out;
}

}  // namespace

TruthAssignment seed_truth(const PredictionState& state, const CorpusFacts& facts) {
    TruthAssignment truth(facts.groups().size());
    for (std::size_t g = 0; g < facts.groups().size(); ++g) {
        auto members = group_members(facts, g);
        std::set<NormalizedText> candidates;
        for (std::size_t q : members) {
            const auto& f = facts.facts(q);
            LetterSet pred = state.get(q);
            if (none_only(f, pred)) {
                for (Letter l : f.substantive_letters().letters()) candidates.insert(f.key(l));
            }
        }
        for (std::size_t q : members) {
            const auto& f = facts.facts(q);
            for (Letter l : (state.get(q) - f.none_letters).letters()) {
                if (!candidates.contains(f.key(l))) truth.set(g, f.key(l), Truth::True);
            }
        }
    }
    return truth;
}

Truth letter_truth(const TruthAssignment& truth, const CorpusFacts& facts, std::size_t q, Letter l) {
    const auto& f = facts.facts(q);
    if (!f.none_letters.contains(l)) return truth.get(f.group_index, f.key(l));
    bool all_false = true;
    for (Letter s : f.substantive_letters().letters()) {
        Truth t = truth.get(f.group_index, f.key(s));
        if (t == Truth::True) return Truth::False;
        if (t != Truth::False) all_false = false;
    }
    return all_false ? Truth::True : Truth::Unknown;
}

LetterSet r1_none_exclusivity(const QuestionFacts& f, LetterSet pred) {
    if (pred.intersects(f.none_letters) && pred.intersects(f.substantive_letters())) return pred - f.none_letters;
    return pred;
}

LetterSet r2_duplicate_consistency(const QuestionFacts& f, LetterSet pred) {
    LetterSet out = pred;
    for (LetterSet cls : f.duplicate_classes) {
        if (cls.intersects(pred)) out |= cls;
    }
    return out;
}

LetterSet r3_overselection_guard(const QuestionFacts& f, LetterSet pred) {
    if (pred == LetterSet::all() && !f.none_letters.empty()) return pred - f.none_letters;
    return pred;
}

std::optional<Letter> r5_excluded_letter(const QuestionFacts& f, LetterSet pred) {
    for (LetterSet cls : f.duplicate_classes) {
        if (cls.size() != 3 || !cls.is_subset_of(pred)) continue;
        LetterSet unique = LetterSet::all() - cls;
        if (unique.intersects(pred)) return unique.letters().front();
    }
    return std::nullopt;
}

namespace {

class Engine {
public:
    Engine(const PredictionState& state, const CorpusFacts& facts)
        : facts_(facts), state_(state), truth_(seed_truth(state, facts)), frozen_(state.size(), false) {}

    ConsistencyResult run(const ConsistencyOptions& options) {
        for (iteration_ = 1; iteration_ <= options.max_iterations; ++iteration_) {
            changed_ = false;
            for (std::size_t g = 0; g < facts_.groups().size(); ++g) apply_rules(g);
            report_.iterations = iteration_;
            if (!changed_) {
                report_.converged = true;
                break;
            }
        }
        if (!report_.converged) {
            spdlog::error("consistency: no fixed point after {} iterations", options.max_iterations);
        }
        for (const auto& c : report_.changes) ++report_.rule_counts[static_cast<std::size_t>(c.rule)];
        return {std::move(state_), std::move(truth_), std::move(report_)};
    }

private:
    const QuestionFacts& f(std::size_t q) const { return facts_.facts(q); }
    const std::string& qid(std::size_t q) const { return facts_.questions()[q].id; }

    void set_pred(std::size_t q, LetterSet after, Rule rule) {
        LetterSet before = state_.get(q);
        if (before == after) return;
        state_.set(q, after);
        report_.changes.push_back({qid(q), rule, before, after, iteration_});
        changed_ = true;
    }

    void contradiction(std::size_t q, Rule rule, std::string detail) {
        report_.contradictions.push_back({qid(q), rule, std::move(detail), iteration_});
    }

    // Moves a substantive text away from Unknown; a conflicting value is a
    // contradiction and leaves the assignment untouched.
    void mark(std::size_t q, Letter l, Truth value, Rule rule) {
        std::size_t g = f(q).group_index;
        const auto& key = f(q).key(l);
        Truth current = truth_.get(g, key);
        if (current == value) return;
        if (!truth_.set(g, key, value)) {
            contradiction(q, rule,
                          "option " + std::string(1, to_char(l)) + " is " + to_string(current) + ", refused " +
                              to_string(value));
            return;
        }
        report_.truth_events.push_back({g, key.str(), value, rule, iteration_});
        changed_ = true;
    }

    void drop_false(const std::vector<std::size_t>& members, Rule rule) {
        for (std::size_t q : members) {
            if (frozen_[q]) continue;
            LetterSet pred = state_.get(q);
            for (Letter l : pred.letters()) {
                if (!f(q).none_letters.contains(l) && letter_truth(truth_, facts_, q, l) == Truth::False) pred.erase(l);
            }
            set_pred(q, pred, rule);
        }
    }

    void apply_rules(std::size_t g) {
        auto members = group_members(facts_, g);

        for (std::size_t q : members) set_pred(q, r1_none_exclusivity(f(q), state_.get(q)), Rule::R1);
        for (std::size_t q : members) set_pred(q, r2_duplicate_consistency(f(q), state_.get(q)), Rule::R2);
        for (std::size_t q : members) set_pred(q, r3_overselection_guard(f(q), state_.get(q)), Rule::R3);

        for (std::size_t q : members) {
            if (frozen_[q]) continue;
            LetterSet add;
            for (Letter l : f(q).substantive_letters().letters()) {
                if (truth_.get(g, f(q).key(l)) == Truth::True) add.insert(l);
            }
            // The unique option beside a selected triple stays out (R5).
            LetterSet grown = state_.get(q) | add;
            if (auto unique = r5_excluded_letter(f(q), grown); unique && !state_.get(q).contains(*unique)) {
                grown.erase(*unique);
            }
            set_pred(q, grown, Rule::R4);
        }

        for (std::size_t q : members) {
            if (frozen_[q]) continue;
            if (auto unique = r5_excluded_letter(f(q), state_.get(q))) {
                set_pred(q, state_.get(q) - f(q).class_of(*unique), Rule::R5);
            }
        }

        bool excluded = false;
        for (std::size_t q : members) {
            if (frozen_[q] || !none_only(f(q), state_.get(q))) continue;
            for (Letter l : f(q).substantive_letters().letters()) mark(q, l, Truth::False, Rule::R6);
            excluded = true;
        }
        if (excluded) drop_false(members, Rule::R6);

        for (std::size_t q : members) {
            if (frozen_[q] || !f(q).none_letters.empty()) continue;
            std::optional<Letter> remaining;
            std::size_t open = 0;
            for (LetterSet cls : f(q).duplicate_classes) {
                Letter head = cls.letters().front();
                if (truth_.get(g, f(q).key(head)) != Truth::False) {
                    ++open;
                    remaining = head;
                }
            }
            if (open == 1) mark(q, *remaining, Truth::True, Rule::R7);
        }

        for (std::size_t q : members) {
            if (frozen_[q]) continue;
            std::vector<LetterSet> open;
            for (LetterSet cls : f(q).duplicate_classes) {
                if (letter_truth(truth_, facts_, q, cls.letters().front()) != Truth::False) open.push_back(cls);
            }
            if (open.empty()) {
                contradiction(q, Rule::R8, "every option is false; original prediction restored");
                set_pred(q, state_.original(q), Rule::R8);
                frozen_[q] = true;
                report_.frozen.push_back(qid(q));
                continue;
            }
            if (open.size() == 1) {
                set_pred(q, open.front(), Rule::R8);
                Letter head = open.front().letters().front();
                if (!f(q).none_letters.contains(head)) mark(q, head, Truth::True, Rule::R8);
            } else if (state_.get(q).empty()) {
                set_pred(q, open.front(), Rule::R8);
                Letter head = open.front().letters().front();
                if (!f(q).none_letters.contains(head)) mark(q, head, Truth::True, Rule::R8);
            }
        }
    }

    const CorpusFacts& facts_;
    PredictionState state_;
    TruthAssignment truth_;
    std::vector<bool> frozen_;
    FixedPointReport report_;
    int iteration_ = 0;
    bool changed_ = false;
};

}  // namespace

ConsistencyResult run_to_fixed_point(const PredictionState& state, const CorpusFacts& facts,
                                     const ConsistencyOptions& options) {
    if (state.size() != facts.questions().size()) {
        throw std::invalid_argument("consistency: " + std::to_string(state.size()) + " predictions for " +
                                    std::to_string(facts.questions().size()) + " questions");
    }
    if (options.max_iterations < 1) throw std::invalid_argument("consistency: max_iterations must be >= 1");
    return Engine(state, facts).run(options);
}

std::vector<std::string> validity_violations(const std::vector<LetterSet>& predictions, const CorpusFacts& facts,
                                             const TruthAssignment* truth, const std::vector<std::string>& frozen) {
    std::vector<std::string> out;
    for (std::size_t q = 0; q < predictions.size(); ++q) {
        const auto& id = facts.questions()[q].id;
        const auto& f = facts.facts(q);
        LetterSet p = predictions[q];
        if (p.empty()) out.push_back(id + ": empty prediction");
        if (p.intersects(f.none_letters) && p.intersects(f.substantive_letters())) {
            out.push_back(id + ": None option selected with a substantive option");
        }
        for (LetterSet cls : f.duplicate_classes) {
            if (cls.intersects(p) && !cls.is_subset_of(p)) out.push_back(id + ": duplicate class " + cls.to_string() + " split");
        }
        if (truth && std::find(frozen.begin(), frozen.end(), id) == frozen.end()) {
            for (Letter l : (p - f.none_letters).letters()) {
                if (truth->get(f.group_index, f.key(l)) == Truth::False) {
                    out.push_back(id + ": false option " + std::string(1, to_char(l)) + " selected");
                }
            }
        }
    }
    return out;
}

std::string change_to_json(const ChangeRecord& c) {
    json obj = {{"question_id", c.question_id},
                {"rule", to_string(c.rule)},
                {"before", c.before.to_string()},
                {"after", c.after.to_string()},
                {"iteration", c.iteration}};
    return obj.dump();
}

std::string report_summary_json(const FixedPointReport& r) {
    json counts = json::object();
    for (std::size_t i = 0; i < kRuleCount; ++i) counts[to_string(static_cast<Rule>(i))] = r.rule_counts[i];
    json contradictions = json::array();
    for (const auto& c : r.contradictions) {
        contradictions.push_back(
            {{"question_id", c.question_id}, {"rule", to_string(c.rule)}, {"detail", c.detail}, {"iteration", c.iteration}});
    }
    json obj = {{"iterations", r.iterations},
                {"converged", r.converged},
                {"total_changes", r.changes.size()},
                {"rule_counts", counts},
                {"truth_events", r.truth_events.size()},
                {"contradictions", contradictions},
                {"frozen", r.frozen}};
    return obj.dump(2);
}

}  // namespace aer
