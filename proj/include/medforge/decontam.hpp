#pragma once

// Two-stage benchmark decontamination. Stage 1 flags any record sharing an
// n-gram (default n=8) with a reference prompt; stage 2 token-aligns the
// record against each hit reference and removes it when the normalized
// alignment difference is at most tau (default 0.5). Alignment is a banded
// window search anchored at the n-gram hit: over record windows of reference
// length whose start lies within +/- |ref| tokens of the hit, take the
// minimum token-level Levenshtein distance divided by |ref|, clamped to
// [0, 1]. Exact copies score 0; incidental overlaps score high and are
// retained.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "medforge/chat_record.hpp"
#include "medforge/tokenizer.hpp"
#include "medforge/util.hpp"

namespace medforge {

struct ReferenceIndex {
    int n = 8;
    // n-gram key (tokens joined by \x1f) -> occurrences as (ref id, offset)
    std::unordered_map<std::string, std::vector<std::pair<int, int>>> grams;
    std::vector<std::vector<std::string>> references;  // token sequences
    std::vector<std::string> reference_names;
    std::string tokenizer_id;
    long short_references = 0;  // shorter than n tokens, indexed as zero grams

    size_t distinct_grams() const { return grams.size(); }
};

inline std::string gram_key(const std::vector<std::string>& tokens, size_t start, size_t n) {
    std::string key;
    for (size_t i = 0; i < n; ++i) {
        if (i) key += '\x1f';
        key += tokens[start + i];
    }
    return key;
}

// Builds the inverted n-gram index over reference texts. References shorter
// than n tokens contribute zero grams and are counted as warnings.
inline ReferenceIndex build_index(const std::vector<std::pair<std::string, std::string>>& references,
                                  int n, const Tokenizer& tokenizer) {
    if (n < 2) throw Error("n-gram order must be >= 2");
    if (references.empty()) throw Error("reference set is empty");
    ReferenceIndex index;
    index.n = n;
    index.tokenizer_id = tokenizer.id();
    for (const auto& [name, text] : references) {
        int ref_id = static_cast<int>(index.references.size());
        index.references.push_back(tokenizer.tokenize(text));
        index.reference_names.push_back(name);
        const auto& tokens = index.references.back();
        if (tokens.size() < static_cast<size_t>(n)) {
            ++index.short_references;
            continue;
        }
        for (size_t i = 0; i + n <= tokens.size(); ++i) {
            index.grams[gram_key(tokens, i, n)].emplace_back(ref_id, static_cast<int>(i));
        }
    }
    return index;
}

inline ReferenceIndex build_index(const std::vector<std::string>& references, int n,
                                  const Tokenizer& tokenizer) {
    std::vector<std::pair<std::string, std::string>> named;
    named.reserve(references.size());
    for (size_t i = 0; i < references.size(); ++i) {
        named.emplace_back("ref/" + std::to_string(i), references[i]);
    }
    return build_index(named, n, tokenizer);
}

enum class DecontamStage { clean, flagged_retained, removed };

inline const char* to_string(DecontamStage s) {
    switch (s) {
        case DecontamStage::clean: return "clean";
        case DecontamStage::flagged_retained: return "flagged_retained";
        case DecontamStage::removed: return "removed";
    }
    return "?";
}

struct DecontamDecision {
    std::string record_id;
    std::optional<int> matched_reference_id;
    DecontamStage stage = DecontamStage::clean;
    std::optional<double> alignment_score;
    double tau = 0.5;
    std::string matched_gram;  // excerpt of the first shared n-gram
};

struct DecontamReport {
    long scanned = 0;
    long clean = 0;
    long flagged_retained = 0;
    long removed = 0;
    struct Removal {
        std::string record_id;
        std::string reference_name;
        double score = 0.0;
        std::string matched_gram;
    };
    std::vector<Removal> removals;
    std::string screened_text = "full conversation";  // all message turns

    Json to_json() const {
        Json removals_json = Json::array();
        for (const auto& r : removals) {
            removals_json.push_back(Json{{"record_id", r.record_id},
                                         {"reference", r.reference_name},
                                         {"score", r.score},
                                         {"matched_gram", r.matched_gram}});
        }
        return Json{{"scanned", scanned},
                    {"clean", clean},
                    {"flagged_retained", flagged_retained},
                    {"removed", removed},
                    {"screened_text", screened_text},
                    {"removals", removals_json}};
    }
};

namespace detail {

// Record token stream: all message contents concatenated with a sentinel
// between messages so n-grams never span message boundaries. The sentinel
// ("\x1e") cannot be produced by any tokenizer token boundary here.
inline std::vector<std::string> record_token_stream(const ChatRecord& record,
                                                    const Tokenizer& tokenizer) {
    std::vector<std::string> stream;
    for (size_t i = 0; i < record.messages.size(); ++i) {
        if (i) stream.emplace_back("\x1e");
        auto tokens = tokenizer.tokenize(record.messages[i].content);
        stream.insert(stream.end(), tokens.begin(), tokens.end());
    }
    return stream;
}

inline bool window_has_sentinel(const std::vector<std::string>& stream, size_t start, size_t n) {
    for (size_t i = start; i < start + n; ++i) {
        if (stream[i] == "\x1e") return true;
    }
    return false;
}

// Token-level Levenshtein distance, two-row DP.
inline size_t token_levenshtein(const std::vector<std::string>& a, size_t a_begin, size_t a_len,
                                const std::vector<std::string>& b) {
    const size_t m = b.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= a_len; ++i) {
        cur[0] = i;
        const std::string& ai = a[a_begin + i - 1];
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (ai == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

}  // namespace detail

// Screens one record against the index: clean when no n-gram is shared,
// otherwise scored against the best-matching reference and compared to tau.
inline DecontamDecision screen(const ChatRecord& record, const ReferenceIndex& index, double tau,
                               const Tokenizer& tokenizer) {
    if (tau < 0.0 || tau > 1.0) throw Error("tau must be in [0, 1]");
    DecontamDecision decision;
    decision.record_id = record.id;
    decision.tau = tau;

    const auto stream = detail::record_token_stream(record, tokenizer);
    const size_t n = static_cast<size_t>(index.n);

    // Stage 1: collect n-gram hits per reference.
    std::map<int, std::vector<size_t>> hits;  // ref id -> record hit positions
    std::string first_gram;
    if (stream.size() >= n) {
        for (size_t i = 0; i + n <= stream.size(); ++i) {
            if (detail::window_has_sentinel(stream, i, n)) continue;
            auto it = index.grams.find(gram_key(stream, i, n));
            if (it == index.grams.end()) continue;
            if (first_gram.empty()) {
                first_gram = gram_key(stream, i, n);
                std::replace(first_gram.begin(), first_gram.end(), '\x1f', ' ');
            }
            for (const auto& [ref_id, _] : it->second) hits[ref_id].push_back(i);
        }
    }
    if (hits.empty()) {
        decision.stage = DecontamStage::clean;
        return decision;
    }
    decision.matched_gram = first_gram;

    // Stage 2: banded alignment; minimum score over all hit references.
    double best = 2.0;
    int best_ref = -1;
    for (const auto& [ref_id, positions] : hits) {
        const auto& ref = index.references[static_cast<size_t>(ref_id)];
        const size_t m = ref.size();
        double ref_best = 2.0;
        if (stream.size() < m) {
            // Record shorter than the reference: align the whole record.
            size_t d = detail::token_levenshtein(stream, 0, stream.size(), ref);
            ref_best = static_cast<double>(d) / static_cast<double>(m);
        } else {
            std::set<size_t> starts;
            for (size_t h : positions) {
                size_t lo = h > m ? h - m : 0;
                size_t hi = std::min(h + m, stream.size() - m);
                for (size_t s = lo; s <= hi; ++s) starts.insert(s);
            }
            for (size_t s : starts) {
                size_t d = detail::token_levenshtein(stream, s, m, ref);
                ref_best = std::min(ref_best, static_cast<double>(d) / static_cast<double>(m));
                if (ref_best == 0.0) break;
            }
        }
        if (ref_best < best) {
            best = ref_best;
            best_ref = ref_id;
        }
    }
    decision.alignment_score = std::clamp(best, 0.0, 1.0);
    decision.matched_reference_id = best_ref;
    decision.stage = *decision.alignment_score <= tau ? DecontamStage::removed
                                                      : DecontamStage::flagged_retained;
    return decision;
}

// Filters a corpus; output preserves input order minus removed records.
inline DecontamReport decontaminate(const std::vector<ChatRecord>& corpus,
                                    const ReferenceIndex& index, double tau,
                                    const Tokenizer& tokenizer,
                                    const std::function<void(const ChatRecord&)>& sink,
                                    const std::function<void(const DecontamDecision&)>& on_decision = {}) {
    DecontamReport report;
    for (const ChatRecord& record : corpus) {
        DecontamDecision d = screen(record, index, tau, tokenizer);
        ++report.scanned;
        switch (d.stage) {
            case DecontamStage::clean:
                ++report.clean;
                sink(record);
                break;
            case DecontamStage::flagged_retained:
                ++report.flagged_retained;
                sink(record);
                break;
            case DecontamStage::removed:
                ++report.removed;
                report.removals.push_back(DecontamReport::Removal{
                    record.id,
                    index.reference_names[static_cast<size_t>(*d.matched_reference_id)],
                    *d.alignment_score, d.matched_gram});
                break;
        }
        if (on_decision) on_decision(d);
    }
    return report;
}

}  // namespace medforge
