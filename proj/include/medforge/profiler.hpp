#pragma once

// Zero-shot metadata annotation through the gateway plus source-vs-synthetic
// drift statistics. One classifier call per (record, axis) over the first
// user turn; outputs are normalized onto a closed per-axis vocabulary.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/gateway.hpp"
#include "medforge/stats.hpp"
#include "medforge/synthgen.hpp"
#include "medforge/util.hpp"

namespace medforge {

inline constexpr const char* kUnknownCategory = "unknown";

// Default per-axis classifier prompt. These are editable defaults, not fixed
// texts; deployments may swap in their own templates via config.
inline constexpr const char* kAxisPromptTemplate =
    "You label medical questions with clinical metadata.\n"
    "Axis: {axis}.\n"
    "Allowed labels: {labels}.\n"
    "Read the question and respond with exactly one allowed label and nothing else.\n"
    "\n"
    "Question:\n"
    "{question}";

struct ProfilerOptions {
    std::vector<std::string> axes = {"specialty", "urgency", "difficulty"};
    std::map<std::string, std::vector<std::string>> vocab;  // categorical axes only
    std::map<std::string, std::string> prompt_templates;    // overrides per axis
    std::string annotator_model = "annotator";
    double temperature = 0.0;
    int max_in_flight = 4;
};

namespace detail {

// Case-fold and strip punctuation: non-alphanumerics become spaces, runs
// collapse.
inline std::string normalize_category(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (char c : raw) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += c;
        } else if (c >= 'A' && c <= 'Z') {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += static_cast<char>(c - 'A' + 'a');
        } else {
            pending_space = true;
        }
    }
    return out;
}

inline size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline bool contains_word(const std::string& haystack, const std::string& needle) {
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || haystack[pos - 1] == ' ';
        const size_t end = pos + needle.size();
        const bool right_ok = end == haystack.size() || haystack[end] == ' ';
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

}  // namespace detail

// Maps a raw classifier output onto the closed vocabulary: exact match after
// normalization, then unique whole-word containment (classifiers often wrap
// the label in chatter), then a single-edit fuzzy match, else "unknown".
inline std::string map_to_vocabulary(std::string_view raw,
                                     const std::vector<std::string>& vocabulary) {
    const std::string norm = detail::normalize_category(raw);
    if (norm.empty()) return kUnknownCategory;
    std::vector<std::string> norm_vocab;
    norm_vocab.reserve(vocabulary.size());
    for (const auto& v : vocabulary) norm_vocab.push_back(detail::normalize_category(v));
    for (size_t i = 0; i < vocabulary.size(); ++i) {
        if (norm == norm_vocab[i]) return vocabulary[i];
    }
    std::optional<size_t> contained;
    for (size_t i = 0; i < vocabulary.size(); ++i) {
        if (detail::contains_word(norm, norm_vocab[i])) {
            if (contained) return kUnknownCategory;  // ambiguous
            contained = i;
        }
    }
    if (contained) return vocabulary[*contained];
    for (size_t i = 0; i < vocabulary.size(); ++i) {
        if (detail::edit_distance(norm, norm_vocab[i]) <= 1) return vocabulary[i];
    }
    return kUnknownCategory;
}

// Difficulty parses as the first standalone digit 1-5 in the output.
inline int map_to_difficulty(std::string_view raw) {
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] >= '1' && raw[i] <= '5') {
            const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
            const bool right_ok =
                i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
            if (left_ok && right_ok) return raw[i] - '0';
        }
    }
    return 0;
}

struct AnnotateReport {
    long records = 0;
    long calls = 0;
    std::map<std::string, long> unknown_by_axis;

    Json to_json() const {
        return Json{{"records", records}, {"calls", calls}, {"unknown_by_axis", unknown_by_axis}};
    }
};

inline std::string axis_prompt(const ProfilerOptions& opts, const std::string& axis,
                               const std::string& question) {
    std::string tmpl = kAxisPromptTemplate;
    if (auto it = opts.prompt_templates.find(axis); it != opts.prompt_templates.end()) {
        tmpl = it->second;
    }
    std::string labels;
    if (axis == "difficulty") {
        labels = "1, 2, 3, 4, 5";
    } else {
        auto it = opts.vocab.find(axis);
        if (it == opts.vocab.end()) throw Error("no vocabulary configured for axis: " + axis);
        for (size_t i = 0; i < it->second.size(); ++i) {
            if (i) labels += ", ";
            labels += it->second[i];
        }
    }
    tmpl = fill_slot(tmpl, "axis", axis);
    tmpl = fill_slot(tmpl, "labels", labels);
    tmpl = fill_slot(tmpl, "question", question);
    return tmpl;
}

// Annotates each record in place. Gateway errors and unmappable outputs
// yield "unknown" (difficulty 0) and are counted, never fatal.
inline AnnotateReport annotate(std::vector<ChatRecord>& records, const ProfilerOptions& opts,
                               Gateway& gateway) {
    AnnotateReport report;
    report.records = static_cast<long>(records.size());

    struct Call {
        size_t record;
        std::string axis;
    };
    std::vector<Call> calls;
    std::vector<ChatRequest> requests;
    for (size_t i = 0; i < records.size(); ++i) {
        const Message* first = records[i].first_user();
        if (!first) continue;
        for (const std::string& axis : opts.axes) {
            ChatRequest req;
            req.model = opts.annotator_model;
            req.temperature = opts.temperature;
            req.seed_tag = records[i].id + "/" + axis;
            req.messages.push_back(ReqMessage{ReqRole::user, axis_prompt(opts, axis, first->content)});
            calls.push_back(Call{i, axis});
            requests.push_back(std::move(req));
        }
    }
    report.calls = static_cast<long>(requests.size());

    std::vector<IndexedResponse> responses = complete_many(gateway, requests, opts.max_in_flight);
    std::sort(responses.begin(), responses.end(),
              [](const IndexedResponse& a, const IndexedResponse& b) { return a.index < b.index; });

    for (const IndexedResponse& ir : responses) {
        const Call& call = calls[ir.index];
        ChatRecord& rec = records[call.record];
        if (!rec.annotations) rec.annotations = AnnotationProfile{};
        const std::string raw = ir.response.ok() ? ir.response.text : "";
        if (call.axis == "difficulty") {
            int level = raw.empty() ? 0 : map_to_difficulty(raw);
            rec.annotations->difficulty = level;
            if (level == 0) ++report.unknown_by_axis[call.axis];
        } else {
            auto vit = opts.vocab.find(call.axis);
            if (vit == opts.vocab.end()) throw Error("no vocabulary configured for axis: " + call.axis);
            std::string label = raw.empty() ? kUnknownCategory : map_to_vocabulary(raw, vit->second);
            if (label == kUnknownCategory) ++report.unknown_by_axis[call.axis];
            if (call.axis == "specialty") rec.annotations->specialty = label;
            else if (call.axis == "urgency") rec.annotations->urgency = label;
            else if (call.axis == "severity") rec.annotations->severity = label;
            else if (call.axis == "geographic_context") rec.annotations->geographic_context = label;
            else if (call.axis == "resource_setting") rec.annotations->resource_setting = label;
            else if (call.axis == "level_of_care") rec.annotations->level_of_care = label;
            else if (call.axis == "question_type_label") rec.annotations->question_type_label = label;
            else if (call.axis == "demographics") rec.annotations->demographics = label;
            else throw Error("unknown annotation axis: " + call.axis);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Drift statistics

struct AxisDrift {
    std::string axis;
    bool ordinal = false;
    double jsd_value = 0.0;  // categorical axes
    double w1_value = 0.0;   // ordinal axes
    double source_mean = 0.0;
    double synthetic_mean = 0.0;
    long source_n = 0;
    long synthetic_n = 0;
    long source_unknown = 0;
    long synthetic_unknown = 0;
    AxisDistribution source_dist;
    AxisDistribution synthetic_dist;
};

struct DriftReport {
    std::vector<AxisDrift> axes;

    Json to_json() const {
        Json out = Json::array();
        for (const AxisDrift& a : axes) {
            Json j{{"axis", a.axis},
                   {"source_n", a.source_n},
                   {"synthetic_n", a.synthetic_n},
                   {"source_unknown", a.source_unknown},
                   {"synthetic_unknown", a.synthetic_unknown}};
            if (a.ordinal) {
                j["w1"] = a.w1_value;
                j["source_mean"] = a.source_mean;
                j["synthetic_mean"] = a.synthetic_mean;
            } else {
                j["jsd"] = a.jsd_value;
            }
            out.push_back(std::move(j));
        }
        return Json{{"axes", out}};
    }

    // One histogram row per (axis, category): axis,category,p_source,p_synthetic
    std::string to_csv() const {
        std::string csv = "axis,category,p_source,p_synthetic\n";
        for (const AxisDrift& a : axes) {
            std::set<std::string> cats(a.source_dist.support.begin(), a.source_dist.support.end());
            cats.insert(a.synthetic_dist.support.begin(), a.synthetic_dist.support.end());
            auto prob = [](const AxisDistribution& d, const std::string& cat) {
                for (size_t i = 0; i < d.support.size(); ++i) {
                    if (d.support[i] == cat) return d.probabilities[i];
                }
                return 0.0;
            };
            for (const std::string& cat : cats) {
                char row[256];
                std::snprintf(row, sizeof row, "%s,%s,%.12g,%.12g\n", a.axis.c_str(), cat.c_str(),
                              prob(a.source_dist, cat), prob(a.synthetic_dist, cat));
                csv += row;
            }
        }
        return csv;
    }
};

namespace detail {

inline std::optional<std::string> axis_label(const ChatRecord& r, const std::string& axis) {
    if (!r.annotations) return std::nullopt;
    const AnnotationProfile& a = *r.annotations;
    if (axis == "specialty") return a.specialty.empty() ? std::nullopt : std::optional(a.specialty);
    if (axis == "urgency") return a.urgency.empty() ? std::nullopt : std::optional(a.urgency);
    if (axis == "severity") return a.severity.empty() ? std::nullopt : std::optional(a.severity);
    if (axis == "geographic_context")
        return a.geographic_context.empty() ? std::nullopt : std::optional(a.geographic_context);
    if (axis == "resource_setting")
        return a.resource_setting.empty() ? std::nullopt : std::optional(a.resource_setting);
    if (axis == "level_of_care")
        return a.level_of_care.empty() ? std::nullopt : std::optional(a.level_of_care);
    if (axis == "question_type_label")
        return a.question_type_label.empty() ? std::nullopt : std::optional(a.question_type_label);
    if (axis == "demographics")
        return a.demographics.empty() ? std::nullopt : std::optional(a.demographics);
    if (axis == "difficulty") {
        if (a.difficulty == 0) return std::nullopt;
        return std::to_string(a.difficulty);
    }
    throw Error("unknown drift axis: " + axis);
}

struct AxisCounts {
    std::map<std::string, long> counts;
    long unknown = 0;
    long n = 0;
};

// "unknown" (and unannotated) cells are excluded from the distribution but
// reported; drift between real categories is the quantity of interest.
inline AxisCounts collect_axis(const std::vector<ChatRecord>& corpus, const std::string& axis) {
    AxisCounts out;
    for (const ChatRecord& r : corpus) {
        auto label = axis_label(r, axis);
        if (!label || *label == kUnknownCategory) {
            ++out.unknown;
            continue;
        }
        ++out.counts[*label];
        ++out.n;
    }
    return out;
}

}  // namespace detail

// Compares annotated source and synthetic corpora: JSD per categorical axis,
// W1 plus means for the ordinal difficulty axis.
inline DriftReport drift_report(const std::vector<ChatRecord>& source,
                                const std::vector<ChatRecord>& synthetic,
                                const std::vector<std::string>& axes) {
    if (source.empty() || synthetic.empty()) throw Error("drift_report requires non-empty corpora");
    DriftReport report;
    for (const std::string& axis : axes) {
        AxisDrift drift;
        drift.axis = axis;
        drift.ordinal = axis == "difficulty";
        auto src = detail::collect_axis(source, axis);
        auto syn = detail::collect_axis(synthetic, axis);
        if (src.n == 0 || syn.n == 0) {
            throw Error("axis '" + axis + "' has no annotated records on one side");
        }
        drift.source_unknown = src.unknown;
        drift.synthetic_unknown = syn.unknown;
        drift.source_n = src.n;
        drift.synthetic_n = syn.n;
        if (drift.ordinal) {
            // Fixed 1..5 support so both sides always align.
            std::map<std::string, long> src_full, syn_full;
            for (int level = 1; level <= 5; ++level) {
                const std::string key = std::to_string(level);
                src_full[key] = src.counts.count(key) ? src.counts[key] : 0;
                syn_full[key] = syn.counts.count(key) ? syn.counts[key] : 0;
            }
            drift.source_dist = AxisDistribution::from_counts(axis, src_full);
            drift.synthetic_dist = AxisDistribution::from_counts(axis, syn_full);
            drift.source_dist.n = src.n;
            drift.synthetic_dist.n = syn.n;
            drift.w1_value = wasserstein1(drift.source_dist, drift.synthetic_dist);
            drift.source_mean = ordinal_mean(drift.source_dist);
            drift.synthetic_mean = ordinal_mean(drift.synthetic_dist);
        } else {
            drift.source_dist = AxisDistribution::from_counts(axis, src.counts);
            drift.synthetic_dist = AxisDistribution::from_counts(axis, syn.counts);
            drift.jsd_value = jsd(drift.source_dist, drift.synthetic_dist);
        }
        report.axes.push_back(std::move(drift));
    }
    return report;
}

}  // namespace medforge
