#pragma once

// Pairwise judging arena: order-swapped comparison tasks, a machine-readable
// judge verdict format, win-rate and Likert aggregation, and a greedy
// multiple-choice accuracy harness.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/gateway.hpp"
#include "medforge/rng.hpp"
#include "medforge/synthgen.hpp"
#include "medforge/util.hpp"

namespace medforge {

inline const std::array<std::string, 9>& judge_criteria() {
    static const std::array<std::string, 9> criteria = {
        "Question comprehension", "Logical reasoning", "Relevance and completeness",
        "Harmlessness",           "Fairness",          "Contextual awareness",
        "Communication",          "Clarity",           "Alignment with guidelines"};
    return criteria;
}

struct ModelResponse {
    std::string model;
    std::string text;
};

struct PairTask {
    std::string prompt_id;
    std::string prompt_text;
    ModelResponse response_a;
    ModelResponse response_b;
    bool swap = false;  // true: presented Model 1 = response_b
};

// Swap flags derive from the run seed and the prompt id, so reruns are
// reproducible and roughly half of the tasks present each order.
inline bool swap_flag(uint64_t run_seed, const std::string& prompt_id) {
    return Rng(splitmix64(run_seed ^ fnv1a64(prompt_id))).bernoulli(0.5);
}

inline std::vector<PairTask> make_pair_tasks(const std::vector<ChatRecord>& prompts,
                                             const std::vector<ModelResponse>& responses_a,
                                             const std::vector<ModelResponse>& responses_b,
                                             uint64_t run_seed) {
    if (prompts.size() != responses_a.size() || prompts.size() != responses_b.size()) {
        throw Error("prompt/response streams differ in length");
    }
    std::vector<PairTask> tasks;
    tasks.reserve(prompts.size());
    for (size_t i = 0; i < prompts.size(); ++i) {
        const Message* user = prompts[i].first_user();
        if (!user) throw Error("prompt record '" + prompts[i].id + "' has no user turn");
        PairTask t;
        t.prompt_id = prompts[i].id;
        t.prompt_text = user->content;
        t.response_a = responses_a[i];
        t.response_b = responses_b[i];
        t.swap = swap_flag(run_seed, t.prompt_id);
        tasks.push_back(std::move(t));
    }
    return tasks;
}

enum class Winner { model1, model2, tie };

inline const char* to_string(Winner w) {
    switch (w) {
        case Winner::model1: return "model1";
        case Winner::model2: return "model2";
        case Winner::tie: return "tie";
    }
    return "?";
}

struct JudgeVerdict {
    Winner winner = Winner::tie;
    // Per criterion: (Model 1 score, Model 2 score), both 1-5 when parse_ok.
    std::array<std::pair<int, int>, 9> scores{};
    std::string rationale_text;
    bool parse_ok = false;
    std::string parse_error;
};

// The judge must end its reply with a machine-readable trailer: one line per
// criterion "<criterion>: <m1>/<m2>" and a final "WINNER: Model 1|Model 2|Tie".
inline constexpr const char* kJudgeSystemPrompt =
    "You are an impartial senior clinician evaluating two anonymous model answers\n"
    "to the same clinical prompt. Compare Model 1 and Model 2 on these nine\n"
    "criteria: question comprehension, logical reasoning, relevance and\n"
    "completeness, harmlessness, fairness, contextual awareness, communication,\n"
    "clarity, and alignment with guidelines. Score each criterion for each model\n"
    "on a Likert scale from 1 (Poor) to 5 (Excellent).\n"
    "\n"
    "First write a brief free-text rationale. Then finish with exactly this\n"
    "machine-readable trailer, one line per criterion, using integer scores:\n"
    "\n"
    "Question comprehension: <model 1 score>/<model 2 score>\n"
    "Logical reasoning: <model 1 score>/<model 2 score>\n"
    "Relevance and completeness: <model 1 score>/<model 2 score>\n"
    "Harmlessness: <model 1 score>/<model 2 score>\n"
    "Fairness: <model 1 score>/<model 2 score>\n"
    "Contextual awareness: <model 1 score>/<model 2 score>\n"
    "Communication: <model 1 score>/<model 2 score>\n"
    "Clarity: <model 1 score>/<model 2 score>\n"
    "Alignment with guidelines: <model 1 score>/<model 2 score>\n"
    "WINNER: Model 1|Model 2|Tie";

inline ChatRequest build_judge_request(const PairTask& task, const std::string& judge_model,
                                       double temperature) {
    const std::string& first = task.swap ? task.response_b.text : task.response_a.text;
    const std::string& second = task.swap ? task.response_a.text : task.response_b.text;
    ChatRequest req;
    req.model = judge_model;
    req.temperature = temperature;
    req.seed_tag = "judge/" + task.prompt_id;
    req.messages.push_back(ReqMessage{ReqRole::system, kJudgeSystemPrompt});
    req.messages.push_back(ReqMessage{
        ReqRole::user, "Clinical prompt:\n" + task.prompt_text + "\n\nModel 1 response:\n" +
                           first + "\n\nModel 2 response:\n" + second});
    return req;
}

// Parses the trailer only; the free-text rationale is preserved verbatim.
// Scores outside 1-5 or a missing criterion/winner line fail the parse.
inline JudgeVerdict parse_judge_verdict(const std::string& raw) {
    JudgeVerdict v;
    v.rationale_text = raw;
    const auto& criteria = judge_criteria();
    std::array<bool, 9> seen{};
    std::optional<Winner> winner;

    for (const std::string& line_raw : split_lines(raw)) {
        const std::string line = trim(line_raw);
        if (line.empty()) continue;
        const std::string lower = ascii_lower(line);
        if (lower.rfind("winner:", 0) == 0) {
            const std::string value = trim(std::string_view(lower).substr(7));
            if (value == "model 1" || value == "model1") winner = Winner::model1;
            else if (value == "model 2" || value == "model2") winner = Winner::model2;
            else if (value == "tie") winner = Winner::tie;
            else {
                v.parse_error = "unrecognized WINNER value";
                return v;
            }
            continue;
        }
        for (size_t c = 0; c < criteria.size(); ++c) {
            const std::string prefix = ascii_lower(criteria[c]) + ":";
            if (lower.rfind(prefix, 0) != 0) continue;
            int m1 = 0, m2 = 0;
            if (std::sscanf(line.c_str() + prefix.size(), " %d / %d", &m1, &m2) != 2) {
                v.parse_error = "malformed score line for '" + criteria[c] + "'";
                return v;
            }
            if (m1 < 1 || m1 > 5 || m2 < 1 || m2 > 5) {
                v.parse_error = "score out of range for '" + criteria[c] + "'";
                return v;
            }
            v.scores[c] = {m1, m2};
            seen[c] = true;
            break;
        }
    }
    for (size_t c = 0; c < criteria.size(); ++c) {
        if (!seen[c]) {
            v.parse_error = "missing score line for '" + criteria[c] + "'";
            return v;
        }
    }
    if (!winner) {
        v.parse_error = "missing WINNER line";
        return v;
    }
    v.winner = *winner;
    v.parse_ok = true;
    return v;
}

// One judging call; parse failures are retried up to max_parse_retries extra
// calls at temperature 0, then surfaced as parse_ok=false.
inline JudgeVerdict judge_pair(const PairTask& task, const std::string& judge_model,
                               Gateway& gateway, double temperature = 0.0,
                               int max_parse_retries = 2) {
    if (task.response_a.text.empty() || task.response_b.text.empty()) {
        JudgeVerdict v;
        v.parse_error = "empty response text";
        return v;
    }
    JudgeVerdict last;
    for (int call = 0; call <= max_parse_retries; ++call) {
        ChatRequest req = build_judge_request(task, judge_model, call == 0 ? temperature : 0.0);
        if (call > 0) req.seed_tag += "/retry" + std::to_string(call);
        ChatResponse resp = gateway.complete(req);
        if (!resp.ok()) {
            last = JudgeVerdict{};
            last.parse_error = "gateway error: " + resp.error;
            return last;
        }
        last = parse_judge_verdict(resp.text);
        if (last.parse_ok) return last;
    }
    return last;
}

// Win/tie/loss counts from model A's perspective after swap re-mapping.
// Invalid verdicts are excluded from n and counted separately.
struct PairwiseAggregate {
    std::string model_a, model_b;
    long n = 0;
    long wins = 0, ties = 0, losses = 0;
    long invalid_count = 0;
    std::map<std::string, double> delta_likert;  // criterion -> mean(score_A - score_B)
    double delta_likert_scalar = 0.0;            // mean across criteria

    double net() const { return n == 0 ? 0.0 : 100.0 * static_cast<double>(wins - losses) / n; }
    double adjusted() const {
        return n == 0 ? 0.0 : 100.0 * (static_cast<double>(wins) + 0.5 * ties) / n;
    }

    Json to_json() const {
        return Json{{"model_a", model_a},
                    {"model_b", model_b},
                    {"n", n},
                    {"wins", wins},
                    {"ties", ties},
                    {"losses", losses},
                    {"invalid_count", invalid_count},
                    {"net_win_rate", net()},
                    {"adjusted_win_rate", adjusted()},
                    {"delta_likert", delta_likert},
                    {"delta_likert_mean", delta_likert_scalar}};
    }
};

inline PairwiseAggregate aggregate(const std::vector<std::pair<PairTask, JudgeVerdict>>& verdicts) {
    PairwiseAggregate agg;
    const auto& criteria = judge_criteria();
    std::array<double, 9> delta_sum{};
    for (const auto& [task, verdict] : verdicts) {
        if (agg.model_a.empty()) {
            agg.model_a = task.response_a.model;
            agg.model_b = task.response_b.model;
        } else if (agg.model_a != task.response_a.model || agg.model_b != task.response_b.model) {
            throw Error("aggregate requires verdicts from a single model pair");
        }
        if (!verdict.parse_ok) {
            ++agg.invalid_count;
            continue;
        }
        // Re-map the presented positions back to models A and B.
        Winner w = verdict.winner;
        if (task.swap && w != Winner::tie) {
            w = w == Winner::model1 ? Winner::model2 : Winner::model1;
        }
        if (w == Winner::model1) ++agg.wins;
        else if (w == Winner::model2) ++agg.losses;
        else ++agg.ties;
        ++agg.n;
        for (size_t c = 0; c < criteria.size(); ++c) {
            const auto [m1, m2] = verdict.scores[c];
            const int a = task.swap ? m2 : m1;
            const int b = task.swap ? m1 : m2;
            delta_sum[c] += a - b;
        }
    }
    if (agg.n > 0) {
        double total = 0.0;
        for (size_t c = 0; c < criteria.size(); ++c) {
            agg.delta_likert[criteria[c]] = delta_sum[c] / static_cast<double>(agg.n);
            total += agg.delta_likert[criteria[c]];
        }
        agg.delta_likert_scalar = total / static_cast<double>(criteria.size());
    }
    return agg;
}

// Mean per-criterion Likert difference between the chosen and rejected
// response, over parse_ok non-tie verdicts. Tie items have no chosen side
// and are excluded. Swap-independent: winner and scores share the presented
// frame.
inline std::map<std::string, double> chosen_minus_rejected(
    const std::vector<std::pair<PairTask, JudgeVerdict>>& verdicts) {
    const auto& criteria = judge_criteria();
    std::array<double, 9> sum{};
    long n = 0;
    for (const auto& [task, verdict] : verdicts) {
        if (!verdict.parse_ok || verdict.winner == Winner::tie) continue;
        ++n;
        for (size_t c = 0; c < criteria.size(); ++c) {
            const auto [m1, m2] = verdict.scores[c];
            sum[c] += verdict.winner == Winner::model1 ? m1 - m2 : m2 - m1;
        }
    }
    std::map<std::string, double> out;
    for (size_t c = 0; c < criteria.size(); ++c) {
        out[criteria[c]] = n == 0 ? 0.0 : sum[c] / static_cast<double>(n);
    }
    return out;
}

// Mean per-criterion Likert per model (A, B) after swap re-mapping; feeds the
// radar-chart CSV.
inline std::string criterion_means_csv(const std::vector<std::pair<PairTask, JudgeVerdict>>& verdicts) {
    const auto& criteria = judge_criteria();
    std::array<double, 9> sum_a{}, sum_b{};
    long n = 0;
    for (const auto& [task, verdict] : verdicts) {
        if (!verdict.parse_ok) continue;
        ++n;
        for (size_t c = 0; c < criteria.size(); ++c) {
            const auto [m1, m2] = verdict.scores[c];
            sum_a[c] += task.swap ? m2 : m1;
            sum_b[c] += task.swap ? m1 : m2;
        }
    }
    std::string csv = "criterion,mean_a,mean_b\n";
    for (size_t c = 0; c < criteria.size(); ++c) {
        char row[160];
        std::snprintf(row, sizeof row, "%s,%.6f,%.6f\n", criteria[c].c_str(),
                      n ? sum_a[c] / n : 0.0, n ? sum_b[c] / n : 0.0);
        csv += row;
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Multiple-choice accuracy harness

struct McqaItemResult {
    std::string id;
    std::string gold;
    std::optional<std::string> extracted;
    bool correct = false;
    std::string error;
};

struct McqaResult {
    long n = 0;
    long correct = 0;
    std::vector<McqaItemResult> items;

    double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }

    Json to_json() const {
        Json items_json = Json::array();
        for (const auto& item : items) {
            Json j{{"id", item.id}, {"gold", item.gold}, {"correct", item.correct}};
            if (item.extracted) j["extracted"] = *item.extracted;
            if (!item.error.empty()) j["error"] = item.error;
            items_json.push_back(std::move(j));
        }
        return Json{{"n", n}, {"correct", correct}, {"accuracy", accuracy()}, {"items", items_json}};
    }
};

// One greedy completion per benchmark item at temperature 0; the shared mcq
// extraction pattern reads the answer letter. Unanswerable items (no letter,
// gateway error) count as wrong and are logged.
inline McqaResult mcqa_eval(const std::string& model, const std::vector<ChatRecord>& benchmark,
                            Gateway& gateway, int max_in_flight = 4) {
    std::vector<ChatRequest> requests;
    requests.reserve(benchmark.size());
    for (const ChatRecord& r : benchmark) {
        if (r.question_type != QuestionType::mcq || !r.gold_label) {
            throw Error("mcqa_eval requires mcq records with gold labels, got '" + r.id + "'");
        }
        ChatRequest req;
        req.model = model;
        req.temperature = 0.0;
        req.seed_tag = "mcqa/" + r.id;
        for (const Message& m : r.messages) {
            if (m.role == Role::assistant) break;  // prompt context only
            req.messages.push_back(ReqMessage{
                m.role == Role::system ? ReqRole::system : ReqRole::user, m.content});
        }
        requests.push_back(std::move(req));
    }

    std::vector<IndexedResponse> responses = complete_many(gateway, requests, max_in_flight);
    std::sort(responses.begin(), responses.end(),
              [](const IndexedResponse& a, const IndexedResponse& b) { return a.index < b.index; });

    McqaResult result;
    for (const IndexedResponse& ir : responses) {
        const ChatRecord& r = benchmark[ir.index];
        McqaItemResult item;
        item.id = r.id;
        item.gold = *r.gold_label;
        if (ir.response.ok()) {
            item.extracted = extract_answer(ir.response.text, "mcq");
            item.correct = item.extracted && equals_ci(*item.extracted, item.gold);
        } else {
            item.error = ir.response.error;
        }
        ++result.n;
        if (item.correct) ++result.correct;
        result.items.push_back(std::move(item));
    }
    return result;
}

}  // namespace medforge
