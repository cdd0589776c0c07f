#pragma once

// Judge validation against a human rater panel: per-rater Cohen's kappa
// versus the leave-one-out consensus, judge kappa versus the full-panel
// consensus, its percentile and z-score within the rater distribution, and
// seeded bootstrap confidence intervals.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "medforge/rng.hpp"
#include "medforge/util.hpp"

namespace medforge {

enum class Verdict { model1, model2, tie };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::model1: return "model1";
        case Verdict::model2: return "model2";
        case Verdict::tie: return "tie";
    }
    return "?";
}

inline std::optional<Verdict> verdict_from_string(std::string_view raw) {
    const std::string s = ascii_lower(trim(raw));
    if (s == "model1" || s == "model 1") return Verdict::model1;
    if (s == "model2" || s == "model 2") return Verdict::model2;
    if (s == "tie") return Verdict::tie;
    return std::nullopt;
}

struct PanelRating {
    std::string rater_id;
    std::string item_id;
    Verdict verdict = Verdict::tie;
};

// Chance-corrected agreement between two equal-length verdict sequences:
// kappa = (p_o - p_e) / (1 - p_e), expected agreement from marginal
// products. Perfect observed agreement returns 1, covering the degenerate
// p_e = 1 case.
inline double cohen_kappa(const std::vector<Verdict>& a, const std::vector<Verdict>& b) {
    if (a.empty()) throw Error("cohen_kappa requires non-empty sequences");
    if (a.size() != b.size()) throw Error("cohen_kappa requires equal-length sequences");
    const double n = static_cast<double>(a.size());
    double agree = 0.0;
    double count_a[3] = {0, 0, 0};
    double count_b[3] = {0, 0, 0};
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++agree;
        ++count_a[static_cast<int>(a[i])];
        ++count_b[static_cast<int>(b[i])];
    }
    const double p_o = agree / n;
    if (p_o == 1.0) return 1.0;
    double p_e = 0.0;
    for (int c = 0; c < 3; ++c) p_e += (count_a[c] / n) * (count_b[c] / n);
    return (p_o - p_e) / (1.0 - p_e);
}

// Strict-majority verdict of the given ratings; no strict majority means
// abstention (the item is skipped for the rater being scored).
inline std::optional<Verdict> consensus(const std::vector<Verdict>& others) {
    if (others.empty()) return std::nullopt;
    long counts[3] = {0, 0, 0};
    for (Verdict v : others) ++counts[static_cast<int>(v)];
    const long total = static_cast<long>(others.size());
    for (int c = 0; c < 3; ++c) {
        if (2 * counts[c] > total) return static_cast<Verdict>(c);
    }
    return std::nullopt;
}

enum class TieMode { with_ties, no_ties };

inline const char* to_string(TieMode m) {
    return m == TieMode::with_ties ? "with_ties" : "no_ties";
}

struct KappaReport {
    TieMode mode = TieMode::with_ties;
    std::map<std::string, double> per_rater;  // included raters only
    double human_mean = 0.0;
    double human_std = 0.0;  // population std
    double human_median = 0.0;
    double human_ci_lo = 0.0, human_ci_hi = 0.0;  // bootstrap over raters
    double judge_kappa = 0.0;
    double judge_ci_lo = 0.0, judge_ci_hi = 0.0;  // bootstrap over items
    bool has_judge_ci = false;
    double judge_percentile = 0.0;  // fraction of raters with kappa <= judge kappa
    double judge_z = 0.0;           // (judge - mean) / std
    int n_raters_included = 0;
    long judge_items = 0;

    Json to_json() const {
        return Json{{"mode", to_string(mode)},
                    {"n_raters_included", n_raters_included},
                    {"human_mean", human_mean},
                    {"human_std", human_std},
                    {"human_median", human_median},
                    {"human_ci", Json::array({human_ci_lo, human_ci_hi})},
                    {"judge_kappa", judge_kappa},
                    {"judge_ci", has_judge_ci ? Json::array({judge_ci_lo, judge_ci_hi}) : Json()},
                    {"judge_items", judge_items},
                    {"judge_percentile", judge_percentile},
                    {"judge_z", judge_z},
                    {"per_rater", per_rater}};
    }
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw Error("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t idx = static_cast<size_t>(std::llround(pos));
    return sorted[std::min(idx, sorted.size() - 1)];
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct HumanStats {
    double mean = 0.0, std_pop = 0.0, median_v = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
};

inline HumanStats human_stats(const std::vector<double>& kappas, Rng rng, int resamples) {
    HumanStats out;
    const double n = static_cast<double>(kappas.size());
    double sum = 0.0;
    for (double k : kappas) sum += k;
    out.mean = sum / n;
    double var = 0.0;
    for (double k : kappas) var += (k - out.mean) * (k - out.mean);
    out.std_pop = std::sqrt(var / n);
    out.median_v = median(kappas);
    std::vector<double> means;
    means.reserve(static_cast<size_t>(resamples));
    for (int b = 0; b < resamples; ++b) {
        double s = 0.0;
        for (size_t i = 0; i < kappas.size(); ++i) {
            s += kappas[rng.bounded(kappas.size())];
        }
        means.push_back(s / n);
    }
    std::sort(means.begin(), means.end());
    out.ci_lo = quantile_sorted(means, 0.025);
    out.ci_hi = quantile_sorted(means, 0.975);
    return out;
}

// Percentile uses the weak inequality (raters at exactly the judge's kappa
// count toward it); z uses the population std.
inline void place_judge(KappaReport& report) {
    long at_or_below = 0;
    std::vector<double> kappas;
    for (const auto& [_, k] : report.per_rater) {
        kappas.push_back(k);
        if (k <= report.judge_kappa) ++at_or_below;
    }
    report.judge_percentile = static_cast<double>(at_or_below) / static_cast<double>(kappas.size());
    if (report.human_std > 0.0) {
        report.judge_z = (report.judge_kappa - report.human_mean) / report.human_std;
    } else {
        report.judge_z = 0.0;
    }
}

}  // namespace detail

// Builds a report from directly placed per-rater kappas and a judge kappa;
// used for synthetic placements and for re-ranking an external judge against
// a published rater distribution.
inline KappaReport rank_judge(const std::vector<double>& rater_kappas, double judge_kappa,
                              TieMode mode = TieMode::with_ties, uint64_t seed = 0,
                              int resamples = 10000) {
    if (rater_kappas.empty()) throw Error("rank_judge requires at least one rater kappa");
    KappaReport report;
    report.mode = mode;
    for (size_t i = 0; i < rater_kappas.size(); ++i) {
        report.per_rater["rater/" + std::to_string(i)] = rater_kappas[i];
    }
    report.n_raters_included = static_cast<int>(rater_kappas.size());
    auto stats = detail::human_stats(rater_kappas, Rng(seed).fork("human-ci"), resamples);
    report.human_mean = stats.mean;
    report.human_std = stats.std_pop;
    report.human_median = stats.median_v;
    report.human_ci_lo = stats.ci_lo;
    report.human_ci_hi = stats.ci_hi;
    report.judge_kappa = judge_kappa;
    detail::place_judge(report);
    return report;
}

// Full panel validation. Raters are scored against the leave-one-out
// consensus; raters with fewer than min_triplets usable triplets are
// excluded. The judge is scored against the all-rater consensus. In no_ties
// mode an item enters a comparison only when both sides are non-tie.
inline KappaReport panel_validate(const std::vector<PanelRating>& panel,
                                  const std::map<std::string, Verdict>& judge, TieMode mode,
                                  uint64_t seed, int resamples = 10000, int min_triplets = 10) {
    KappaReport report;
    report.mode = mode;

    std::map<std::string, std::map<std::string, Verdict>> by_item;  // item -> rater -> verdict
    std::set<std::string> raters;
    for (const PanelRating& r : panel) {
        auto [it, inserted] = by_item[r.item_id].emplace(r.rater_id, r.verdict);
        if (!inserted) {
            throw Error("duplicate rating for (" + r.rater_id + ", " + r.item_id + ")");
        }
        raters.insert(r.rater_id);
    }

    const bool drop_ties = mode == TieMode::no_ties;

    // Per-rater kappa vs leave-one-out consensus.
    for (const std::string& rater : raters) {
        std::vector<Verdict> mine, cons;
        for (const auto& [item, ratings] : by_item) {
            auto it = ratings.find(rater);
            if (it == ratings.end()) continue;
            std::vector<Verdict> others;
            for (const auto& [other_rater, v] : ratings) {
                if (other_rater != rater) others.push_back(v);
            }
            auto c = consensus(others);
            if (!c) continue;
            if (drop_ties && (it->second == Verdict::tie || *c == Verdict::tie)) continue;
            mine.push_back(it->second);
            cons.push_back(*c);
        }
        if (static_cast<int>(mine.size()) < min_triplets) continue;
        report.per_rater[rater] = cohen_kappa(mine, cons);
    }
    report.n_raters_included = static_cast<int>(report.per_rater.size());
    if (report.per_rater.empty()) throw Error("no raters meet the minimum triplet requirement");

    // Judge kappa vs all-rater consensus.
    std::vector<Verdict> judge_seq, consensus_seq;
    for (const auto& [item, ratings] : by_item) {
        auto jt = judge.find(item);
        if (jt == judge.end()) continue;
        std::vector<Verdict> all;
        for (const auto& [_, v] : ratings) all.push_back(v);
        auto c = consensus(all);
        if (!c) continue;
        if (drop_ties && (jt->second == Verdict::tie || *c == Verdict::tie)) continue;
        judge_seq.push_back(jt->second);
        consensus_seq.push_back(*c);
    }
    if (judge_seq.empty()) throw Error("judge has no usable items against the panel");
    report.judge_items = static_cast<long>(judge_seq.size());
    report.judge_kappa = cohen_kappa(judge_seq, consensus_seq);

    std::vector<double> kappas;
    for (const auto& [_, k] : report.per_rater) kappas.push_back(k);
    auto stats = detail::human_stats(kappas, Rng(seed).fork("human-ci"), resamples);
    report.human_mean = stats.mean;
    report.human_std = stats.std_pop;
    report.human_median = stats.median_v;
    report.human_ci_lo = stats.ci_lo;
    report.human_ci_hi = stats.ci_hi;

    // Judge CI bootstraps items; the human CI above bootstraps raters.
    {
        Rng rng = Rng(seed).fork("judge-ci");
        std::vector<double> boot;
        boot.reserve(static_cast<size_t>(resamples));
        std::vector<Verdict> a(judge_seq.size()), b(judge_seq.size());
        for (int r = 0; r < resamples; ++r) {
            for (size_t i = 0; i < judge_seq.size(); ++i) {
                const size_t pick = static_cast<size_t>(rng.bounded(judge_seq.size()));
                a[i] = judge_seq[pick];
                b[i] = consensus_seq[pick];
            }
            boot.push_back(cohen_kappa(a, b));
        }
        std::sort(boot.begin(), boot.end());
        report.judge_ci_lo = detail::quantile_sorted(boot, 0.025);
        report.judge_ci_hi = detail::quantile_sorted(boot, 0.975);
        report.has_judge_ci = true;
    }

    detail::place_judge(report);
    return report;
}

// ---------------------------------------------------------------------------
// Panel CSV input: header "rater_id,item_id,verdict", one rating per line.

inline std::vector<PanelRating> parse_panel_csv(const std::string& content) {
    std::vector<PanelRating> out;
    const auto lines = split_lines(content);
    if (lines.empty() || trim(lines[0]) != "rater_id,item_id,verdict") {
        throw Error("panel CSV must start with header 'rater_id,item_id,verdict'");
    }
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw Error("panel CSV line " + std::to_string(i + 1) + ": expected 3 columns");
        }
        PanelRating r;
        r.rater_id = trim(line.substr(0, c1));
        r.item_id = trim(line.substr(c1 + 1, c2 - c1 - 1));
        auto v = verdict_from_string(line.substr(c2 + 1));
        if (r.rater_id.empty() || r.item_id.empty() || !v) {
            throw Error("panel CSV line " + std::to_string(i + 1) + ": invalid rating");
        }
        r.verdict = *v;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace medforge
