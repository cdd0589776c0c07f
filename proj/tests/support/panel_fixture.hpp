#pragma once

// Hand-built 4-rater panel with exactly computable kappas. 128 items with a
// hidden truth alternating model1/model2. Each rater votes the truth except
// on their own block, where they vote the opposite; every leave-one-out
// consensus therefore equals the truth (the other three are 2-vs-1 at
// worst). Deviations per rater: 48, 48, 16, 16 items, balanced across both
// truth values, giving per-rater kappas {1/4, 1/4, 3/4, 3/4} exactly (all
// dyadic). A judge that deviates on 32 balanced items lands at kappa 1/2 =
// the rater mean, so percentile is 0.5 and the z-score is exactly 0.

#include <map>
#include <string>
#include <vector>

#include "medforge/panel_stats.hpp"

namespace testsupport {

struct ExactPanel {
    std::vector<medforge::PanelRating> ratings;
    std::map<std::string, medforge::Verdict> judge;
    std::map<std::string, double> expected_kappa;  // rater -> exact value
    double expected_judge_kappa = 0.5;
};

inline ExactPanel make_exact_panel() {
    using medforge::PanelRating;
    using medforge::Verdict;
    const int n_items = 128;
    auto truth = [](int item) { return item % 2 == 0 ? Verdict::model1 : Verdict::model2; };
    auto flip = [](Verdict v) { return v == Verdict::model1 ? Verdict::model2 : Verdict::model1; };
    struct Block {
        int begin, end;
    };
    const Block blocks[4] = {{0, 48}, {48, 96}, {96, 112}, {112, 128}};

    ExactPanel panel;
    for (int r = 0; r < 4; ++r) {
        const std::string rater = "rater" + std::to_string(r);
        for (int item = 0; item < n_items; ++item) {
            const bool deviate = item >= blocks[r].begin && item < blocks[r].end;
            panel.ratings.push_back(PanelRating{
                rater, "item" + std::to_string(item), deviate ? flip(truth(item)) : truth(item)});
        }
    }
    for (int item = 0; item < n_items; ++item) {
        panel.judge["item" + std::to_string(item)] = item < 32 ? flip(truth(item)) : truth(item);
    }
    panel.expected_kappa = {{"rater0", 0.25}, {"rater1", 0.25}, {"rater2", 0.75}, {"rater3", 0.75}};
    return panel;
}

}  // namespace testsupport
