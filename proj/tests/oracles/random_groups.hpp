#pragma once

// Random sibling groups for consistency property tests: options drawn from a
// small per-group text pool so duplicates and shared texts are common, with
// None options and None-only predictions mixed in.

#include <random>
#include <string>
#include <vector>

#include "aer/corpus.hpp"
#include "aer/letters.hpp"

namespace aer::ref {

struct SyntheticRun {
    std::vector<QuestionRecord> questions;
    std::vector<LetterSet> predictions;
};

inline SyntheticRun random_sibling_groups(std::mt19937_64& rng, int groups, int max_siblings = 4,
                                          int pool_size = 6) {
    SyntheticRun run;
    std::uniform_int_distribution<int> siblings(1, max_siblings), pool(0, pool_size - 1), mask(1, 15);
    std::bernoulli_distribution has_none(0.35), none_only(0.3);
    for (int g = 0; g < groups; ++g) {
        int n = siblings(rng);
        for (int s = 0; s < n; ++s) {
            QuestionRecord q;
            q.topic_id = g % 7;
            q.id = "g" + std::to_string(g) + "-q" + std::to_string(s);
            q.target_event = "Event number " + std::to_string(g) + (s % 2 ? "." : "");
            for (auto& opt : q.options) opt = "Cause " + std::to_string(g) + "-" + std::to_string(pool(rng));
            bool with_none = has_none(rng);
            if (with_none) q.options[3] = "None of the others are correct causes.";
            LetterSet pred = LetterSet::from_mask(static_cast<std::uint8_t>(mask(rng)));
            if (with_none && none_only(rng)) pred = LetterSet{Letter::D};
            run.questions.push_back(std::move(q));
            run.predictions.push_back(pred);
        }
    }
    return run;
}

}  // namespace aer::ref
