#pragma once

// Synthetic generation pipelines: exemplar sampling, prompt assembly, output
// parsing, gold-label rejection sampling, and answer-position monitoring.

#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/gateway.hpp"
#include "medforge/prompts.hpp"
#include "medforge/rng.hpp"
#include "medforge/util.hpp"

namespace medforge {

// ---------------------------------------------------------------------------
// Exemplar sampling

enum class PoolId { labeled, unlabeled, moove_train };

inline const char* to_string(PoolId p) {
    switch (p) {
        case PoolId::labeled: return "labeled";
        case PoolId::unlabeled: return "unlabeled";
        case PoolId::moove_train: return "moove_train";
    }
    return "?";
}

struct ExemplarDraw {
    PoolId pool_id = PoolId::labeled;
    std::vector<size_t> exemplar_indices;  // positions in the pool, draw order
    std::vector<std::string> exemplar_ids;
    uint64_t rng_seed = 0;
};

// Uniform draw of k distinct pool items; a seeded partial Fisher-Yates, so
// every k-subset is equally likely and the draw is reproducible.
inline ExemplarDraw draw_exemplars(const std::vector<ChatRecord>& pool, PoolId pool_id,
                                   uint64_t rng_seed, int k = 5) {
    if (pool.size() < static_cast<size_t>(k)) {
        throw Error("exemplar pool has " + std::to_string(pool.size()) + " items, need " +
                    std::to_string(k));
    }
    Rng rng(rng_seed);
    std::vector<size_t> indices(pool.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    ExemplarDraw draw;
    draw.pool_id = pool_id;
    draw.rng_seed = rng_seed;
    for (int i = 0; i < k; ++i) {
        size_t j = static_cast<size_t>(i) + static_cast<size_t>(rng.bounded(indices.size() - i));
        std::swap(indices[i], indices[j]);
        draw.exemplar_indices.push_back(indices[i]);
        draw.exemplar_ids.push_back(pool[indices[i]].id);
    }
    return draw;
}

// ---------------------------------------------------------------------------
// Output parsing

struct GuidelineQa {
    std::string question;
    std::string answer;
};

struct GuidelineBatch {
    std::vector<GuidelineQa> pairs;
    std::vector<std::string> skipped;  // reasons for malformed blocks

    bool ok() const { return !pairs.empty(); }
};

// Extracts well-formed <qa><question>...</question><answer>...</answer></qa>
// blocks; malformed blocks are skipped with a reason. Zero well-formed
// blocks is the parse-failure signal (ok() == false).
inline GuidelineBatch parse_guideline_batch(std::string_view raw) {
    GuidelineBatch out;
    size_t pos = 0;
    const std::string text(raw);
    while (true) {
        size_t qa_open = text.find("<qa>", pos);
        if (qa_open == std::string::npos) break;
        size_t qa_close = text.find("</qa>", qa_open);
        if (qa_close == std::string::npos) {
            out.skipped.push_back("missing </qa>");
            break;
        }
        pos = qa_close + 5;
        std::string_view block(text.data() + qa_open, qa_close - qa_open);
        auto section = [&](const char* open, const char* close,
                           const char* what) -> std::optional<std::string> {
            size_t o = block.find(open);
            if (o == std::string_view::npos) {
                out.skipped.push_back(std::string("missing ") + open + " in " + what);
                return std::nullopt;
            }
            o += std::string_view(open).size();
            size_t c = block.find(close, o);
            if (c == std::string_view::npos) {
                out.skipped.push_back(std::string("missing ") + close + " in " + what);
                return std::nullopt;
            }
            std::string content = trim(block.substr(o, c - o));
            if (content.empty()) {
                out.skipped.push_back(std::string("empty ") + what);
                return std::nullopt;
            }
            return content;
        };
        auto question = section("<question>", "</question>", "question");
        if (!question) continue;
        auto answer = section("<answer>", "</answer>", "answer");
        if (!answer) continue;
        out.pairs.push_back(GuidelineQa{*question, *answer});
    }
    return out;
}

// Single <question>...</question> block (the open-ended vignette pipelines).
inline std::optional<std::string> parse_question_block(std::string_view raw) {
    const std::string text(raw);
    size_t o = text.find("<question>");
    if (o == std::string::npos) return std::nullopt;
    o += 10;
    size_t c = text.find("</question>", o);
    if (c == std::string::npos) return std::nullopt;
    std::string content = trim(text.substr(o, c - o));
    if (content.empty()) return std::nullopt;
    return content;
}

// Answer extraction, keyed by dataset family. The mcq pattern takes the last
// occurrence so rationales that restate intermediate answers do not mislead.
class AnswerExtractor {
public:
    static const AnswerExtractor& instance() {
        static AnswerExtractor ex;
        return ex;
    }

    bool has_family(const std::string& family) const {
        return family == "mcq" || family == "open";
    }

    std::optional<std::string> extract(std::string_view raw, const std::string& family) const {
        if (family == "mcq") return extract_mcq(raw);
        if (family == "open") return extract_open(raw);
        throw Error("no extraction pattern registered for family: " + family);
    }

private:
    static std::optional<std::string> extract_mcq(std::string_view raw) {
        static const std::regex pattern(R"(Answer:\s*\(?([A-E])\)?)",
                                        std::regex_constants::icase);
        std::string text(raw);
        std::optional<std::string> last;
        for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
             it != std::sregex_iterator(); ++it) {
            std::string letter = (*it)[1].str();
            if (letter[0] >= 'a' && letter[0] <= 'z') letter[0] -= 'a' - 'A';
            last = letter;
        }
        return last;
    }

    static std::optional<std::string> extract_open(std::string_view raw) {
        static const std::regex marker(R"(Answer:)", std::regex_constants::icase);
        std::string text(raw);
        std::optional<size_t> last_end;
        for (auto it = std::sregex_iterator(text.begin(), text.end(), marker);
             it != std::sregex_iterator(); ++it) {
            last_end = static_cast<size_t>(it->position(0)) + it->length(0);
        }
        if (last_end) {
            std::string tail = trim(text.substr(*last_end));
            if (!tail.empty()) return tail;
            return std::nullopt;
        }
        std::string whole = trim(text);
        if (whole.empty()) return std::nullopt;
        return whole;
    }
};

inline std::optional<std::string> extract_answer(std::string_view raw, const std::string& family) {
    return AnswerExtractor::instance().extract(raw, family);
}

inline std::optional<std::string> extract_answer(std::string_view raw, QuestionType qt) {
    return extract_answer(raw, qt == QuestionType::mcq ? "mcq" : "open");
}

// ---------------------------------------------------------------------------
// Rejection sampling

struct RejectionAttempt {
    std::string raw_text;
    std::optional<std::string> extracted;
    bool matched = false;
};

struct RejectionOutcome {
    std::vector<RejectionAttempt> attempts;
    bool accepted = false;
    std::optional<ChatRecord> final_record;

    int attempts_used() const { return static_cast<int>(attempts.size()); }
};

inline bool equals_ci(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        char x = a[i], y = b[i];
        if (x >= 'A' && x <= 'Z') x += 'a' - 'A';
        if (y >= 'A' && y <= 'Z') y += 'a' - 'A';
        if (x != y) return false;
    }
    return true;
}

using RecordBuilder = std::function<std::optional<ChatRecord>(const std::string& raw_text,
                                                              int attempts_used)>;

// Re-asks the teacher until the extracted answer equals the gold label
// (case-insensitive), up to max_attempts. A gateway transport failure counts
// as a failed attempt. The optional builder constructs the final record from
// the accepted raw text.
inline RejectionOutcome rejection_sample(ChatRequest prompt, const std::string& gold,
                                         Gateway& gateway, int max_attempts = 8,
                                         double temperature = 0.7,
                                         const std::string& family = "mcq",
                                         const RecordBuilder& builder = {}) {
    if (gold.empty()) throw Error("rejection_sample requires a non-empty gold label");
    if (max_attempts < 1) throw Error("max_attempts must be >= 1");
    prompt.temperature = temperature;
    RejectionOutcome outcome;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        ChatResponse resp = gateway.complete(prompt);
        RejectionAttempt a;
        if (resp.ok()) {
            a.raw_text = resp.text;
            a.extracted = extract_answer(resp.text, family);
            a.matched = a.extracted && equals_ci(*a.extracted, gold);
        }
        outcome.attempts.push_back(a);
        if (a.matched) {
            outcome.accepted = true;
            if (builder) outcome.final_record = builder(a.raw_text, attempt);
            break;
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Answer-position monitoring

struct PositionMonitorOptions {
    std::string letters = "ABCD";  // expected letter universe
    double threshold = 0.25;
    long min_window = 200;
};

struct PositionAlert {
    long window = 0;
    double deviation = 0.0;
};

// Running gold-letter counts over accepted multiple-choice items. Deviation
// is max |observed - expected| / expected over the configured letters, with
// expected = window / #letters; alerts fire once the warm-up window is met.
class PositionMonitor {
public:
    explicit PositionMonitor(PositionMonitorOptions opts = {}) : opts_(std::move(opts)) {
        if (opts_.letters.empty()) throw Error("monitor requires at least one letter");
    }

    void observe(char letter) {
        ++counts_[letter];
        ++window_;
        if (alerting()) {
            if (!was_alerting_) {
                alerts_.push_back(PositionAlert{window_, deviation()});
                was_alerting_ = true;
            }
        } else {
            was_alerting_ = false;
        }
    }

    long window() const { return window_; }
    const std::map<char, long>& counts() const { return counts_; }

    double deviation() const {
        if (window_ == 0) return 0.0;
        const double expected = static_cast<double>(window_) /
                                static_cast<double>(opts_.letters.size());
        double worst = 0.0;
        for (char letter : opts_.letters) {
            auto it = counts_.find(letter);
            const double observed = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
            worst = std::max(worst, std::abs(observed - expected) / expected);
        }
        return worst;
    }

    bool alerting() const {
        return window_ >= opts_.min_window && deviation() > opts_.threshold;
    }

    const std::vector<PositionAlert>& alerts() const { return alerts_; }

    Json to_json() const {
        Json counts = Json::object();
        for (const auto& [letter, count] : counts_) counts[std::string(1, letter)] = count;
        Json alerts = Json::array();
        for (const auto& a : alerts_) {
            alerts.push_back(Json{{"window", a.window}, {"deviation", a.deviation}});
        }
        return Json{{"counts", counts},
                    {"window", window_},
                    {"deviation", deviation()},
                    {"alerting", alerting()},
                    {"alerts", alerts}};
    }

private:
    PositionMonitorOptions opts_;
    std::map<char, long> counts_;
    long window_ = 0;
    bool was_alerting_ = false;
    std::vector<PositionAlert> alerts_;
};

// Folds a stream of accepted mcq records into a monitor.
inline PositionMonitor monitor_positions(const std::vector<ChatRecord>& accepted,
                                         PositionMonitorOptions opts = {}) {
    PositionMonitor monitor(std::move(opts));
    for (const ChatRecord& r : accepted) {
        if (r.question_type != QuestionType::mcq || !r.gold_label || r.gold_label->size() != 1) {
            throw Error("monitor_positions expects mcq records with letter gold labels, got '" +
                        r.id + "'");
        }
        monitor.observe((*r.gold_label)[0]);
    }
    return monitor;
}

// ---------------------------------------------------------------------------
// Generation drivers

struct SynthOptions {
    SynthComponent component = SynthComponent::curated_qa;
    std::string teacher_model = "teacher";
    uint64_t seed = 0;
    int target_count = 0;  // generation jobs (curated/moove); guidelines use one job per doc
    int max_attempts = 8;
    double temperature = 0.7;
    std::string date = "2025-06-01";
    std::string reasoning = "low";
    int review_every = 500;
    int max_in_flight = 4;
    PositionMonitorOptions monitor;
};

struct SynthJobLog {
    long job = 0;
    std::string outcome;  // accepted | rejected | parse_failed | pool_skipped
    int attempts = 0;
    std::string detail;
};

struct SynthResult {
    std::vector<ChatRecord> records;  // deterministic order: by job, then item
    std::vector<SynthJobLog> logs;    // by job
    PositionMonitor monitor{PositionMonitorOptions{}};
    long jobs = 0;
    long accepted_jobs = 0;
    long rejected_jobs = 0;
    std::vector<size_t> review_indices;  // every Nth accepted record

    Json report_json() const {
        long accepted_records = static_cast<long>(records.size());
        return Json{{"jobs", jobs},
                    {"accepted_jobs", accepted_jobs},
                    {"rejected_jobs", rejected_jobs},
                    {"records", accepted_records},
                    {"position_monitor", monitor.to_json()},
                    {"review_items", review_indices.size()}};
    }
};

namespace detail {

inline void parallel_jobs(long n, int workers, const std::function<void(long)>& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    auto run = [&] {
        for (;;) {
            long i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    long count = std::min<long>(workers, n);
    for (long w = 0; w < count; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
}

inline std::string canonical_prompt_text(const ChatRequest& req) {
    std::string canon;
    for (const auto& m : req.messages) {
        canon += to_string(m.role);
        canon += '\x1f';
        canon += m.content;
        canon += '\x1e';
    }
    // The job tag keeps ids distinct even when two jobs draw identical
    // exemplars and receive identical replies.
    canon += "tag=";
    canon += req.seed_tag;
    return canon;
}

inline std::string synth_id(SynthComponent component, const ChatRequest& prompt, int attempt,
                            int item = -1) {
    std::string payload = canonical_prompt_text(prompt);
    payload += "#attempt=" + std::to_string(attempt);
    if (item >= 0) payload += "#item=" + std::to_string(item);
    return std::string("synth/") + to_string(component) + "/" + sha256_hex(payload);
}

// Splits a generated "<question>... <answer>..." reply into its two parts.
inline std::optional<std::pair<std::string, std::string>> split_question_answer(
    std::string_view raw) {
    const std::string text(raw);
    size_t q = text.find("<question>");
    if (q == std::string::npos) return std::nullopt;
    q += 10;
    size_t a = text.find("<answer>", q);
    if (a == std::string::npos) return std::nullopt;
    std::string question = trim(text.substr(q, a - q));
    std::string answer = trim(text.substr(a + 8));
    auto strip_tag = [](std::string& s, const char* tag) {
        size_t p = s.rfind(tag);
        if (p != std::string::npos && trim_view(std::string_view(s).substr(p + strlen(tag))).empty()) {
            s = trim(s.substr(0, p));
        }
    };
    strip_tag(question, "</question>");
    strip_tag(answer, "</answer>");
    if (question.empty() || answer.empty()) return std::nullopt;
    return std::make_pair(question, answer);
}

struct JobResult {
    std::vector<ChatRecord> records;
    SynthJobLog log;
};

inline SynthResult assemble(std::vector<JobResult> jobs, const SynthOptions& opts) {
    SynthResult result;
    result.monitor = PositionMonitor(opts.monitor);
    result.jobs = static_cast<long>(jobs.size());
    long accepted_count = 0;
    for (auto& job : jobs) {
        result.logs.push_back(job.log);
        if (job.log.outcome == "accepted") ++result.accepted_jobs;
        else ++result.rejected_jobs;
        for (auto& rec : job.records) {
            if (rec.question_type == QuestionType::mcq && rec.gold_label) {
                result.monitor.observe((*rec.gold_label)[0]);
            }
            result.records.push_back(std::move(rec));
            ++accepted_count;
            if (opts.review_every > 0 && accepted_count % opts.review_every == 0) {
                result.review_indices.push_back(result.records.size() - 1);
            }
        }
    }
    return result;
}

}  // namespace detail

// Exam-style QA seeded from the curated pool. The pool is partitioned by
// question_type into labeled (mcq) and unlabeled (open) buckets and jobs are
// assigned proportionally. Labeled jobs rejection-sample against the gold
// label of the first drawn exemplar, which anchors the new item's declared
// answer letter and keeps the accepted letter distribution tied to the
// pool's; unlabeled jobs accept the first parseable output.
inline SynthResult run_curated(const std::vector<ChatRecord>& pool, const SynthOptions& opts,
                               Gateway& gateway) {
    std::vector<ChatRecord> labeled, unlabeled;
    for (const ChatRecord& r : pool) {
        if (!r.first_user() || !r.first_assistant()) continue;
        if (r.question_type == QuestionType::mcq && r.gold_label) labeled.push_back(r);
        else if (r.question_type == QuestionType::open) unlabeled.push_back(r);
    }
    const size_t total = labeled.size() + unlabeled.size();
    if (total == 0) throw Error("curated pool has no usable exemplars");
    long labeled_jobs = labeled.size() < 5
        ? 0
        : static_cast<long>((static_cast<double>(opts.target_count) * labeled.size() / total) + 0.5);
    if (unlabeled.size() < 5) labeled_jobs = opts.target_count;
    if (labeled.size() < 5 && unlabeled.size() < 5) {
        throw Error("curated pool buckets are too small (need 5 exemplars)");
    }

    const PromptTemplate tmpl = default_template(SynthComponent::curated_qa, opts.date, opts.reasoning);
    std::vector<detail::JobResult> jobs(static_cast<size_t>(opts.target_count));
    Rng base(opts.seed);

    detail::parallel_jobs(opts.target_count, opts.max_in_flight, [&](long job) {
        detail::JobResult& out = jobs[static_cast<size_t>(job)];
        out.log.job = job;
        const bool is_labeled = job < labeled_jobs;
        const auto& bucket = is_labeled ? labeled : unlabeled;
        const uint64_t draw_seed = base.fork(static_cast<uint64_t>(job)).seed();
        ExemplarDraw draw = draw_exemplars(bucket, is_labeled ? PoolId::labeled : PoolId::unlabeled,
                                           draw_seed);
        std::vector<Exemplar> exemplars;
        for (size_t idx : draw.exemplar_indices) {
            exemplars.push_back(Exemplar{bucket[idx].first_user()->content,
                                         bucket[idx].first_assistant()->content});
        }
        ChatRequest prompt = build_curated_prompt(tmpl, exemplars, is_labeled, opts.teacher_model,
                                                  opts.temperature);
        prompt.seed_tag = "synth/curated/" + std::to_string(job);

        if (is_labeled) {
            const std::string gold = *bucket[draw.exemplar_indices[0]].gold_label;
            RecordBuilder builder = [&](const std::string& raw, int attempts) -> std::optional<ChatRecord> {
                auto qa = detail::split_question_answer(raw);
                if (!qa) return std::nullopt;
                ChatRecord rec;
                rec.id = detail::synth_id(SynthComponent::curated_qa, prompt, attempts);
                rec.source = "synthetic/curated_qa";
                rec.question_type = QuestionType::mcq;
                rec.gold_label = gold;
                rec.messages = {Message{Role::user, qa->first},
                                Message{Role::assistant, qa->second}};
                rec.synthetic = SyntheticInfo{SynthComponent::curated_qa, opts.teacher_model, attempts};
                return rec;
            };
            RejectionOutcome outcome = rejection_sample(prompt, gold, gateway, opts.max_attempts,
                                                        opts.temperature, "mcq", builder);
            out.log.attempts = outcome.attempts_used();
            if (outcome.accepted && outcome.final_record) {
                out.log.outcome = "accepted";
                out.records.push_back(std::move(*outcome.final_record));
            } else if (outcome.accepted) {
                out.log.outcome = "parse_failed";
                out.log.detail = "answer matched but question/answer tags missing";
            } else {
                out.log.outcome = "rejected";
            }
        } else {
            for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
                out.log.attempts = attempt;
                ChatRequest req = prompt;
                req.temperature = opts.temperature;
                ChatResponse resp = gateway.complete(req);
                if (!resp.ok()) continue;
                auto qa = detail::split_question_answer(resp.text);
                if (!qa) continue;
                ChatRecord rec;
                rec.id = detail::synth_id(SynthComponent::curated_qa, prompt, attempt);
                rec.source = "synthetic/curated_qa";
                rec.question_type = QuestionType::open;
                rec.messages = {Message{Role::user, qa->first},
                                Message{Role::assistant, qa->second}};
                rec.synthetic = SyntheticInfo{SynthComponent::curated_qa, opts.teacher_model, attempt};
                out.records.push_back(std::move(rec));
                out.log.outcome = "accepted";
                break;
            }
            if (out.log.outcome.empty()) out.log.outcome = "rejected";
        }
    });

    return detail::assemble(std::move(jobs), opts);
}

// Guideline-grounded QA: one generation call per guideline document, up to
// ten vignette pairs per call. Each pair's gold label is read from its own
// answer; pairs without an extractable letter are discarded.
inline SynthResult run_guidelines(const std::vector<GuidelineDoc>& docs, const SynthOptions& opts,
                                  Gateway& gateway) {
    const PromptTemplate tmpl =
        default_template(SynthComponent::guidelines_qa, opts.date, opts.reasoning);
    std::vector<detail::JobResult> jobs(docs.size());

    detail::parallel_jobs(static_cast<long>(docs.size()), opts.max_in_flight, [&](long job) {
        detail::JobResult& out = jobs[static_cast<size_t>(job)];
        out.log.job = job;
        const GuidelineDoc& doc = docs[static_cast<size_t>(job)];
        ChatRequest prompt = build_guideline_prompt(tmpl, doc, opts.teacher_model, opts.temperature);
        prompt.seed_tag = "synth/guidelines/" + doc.id;

        for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
            out.log.attempts = attempt;
            ChatResponse resp = gateway.complete(prompt);
            if (!resp.ok()) continue;
            GuidelineBatch batch = parse_guideline_batch(resp.text);
            if (!batch.ok()) continue;
            int kept = 0;
            for (size_t k = 0; k < batch.pairs.size(); ++k) {
                const GuidelineQa& pair = batch.pairs[k];
                auto letter = extract_answer(pair.answer, "mcq");
                if (!letter) {
                    out.log.detail += "item " + std::to_string(k) + ": no extractable letter; ";
                    continue;
                }
                ChatRecord rec;
                rec.id = detail::synth_id(SynthComponent::guidelines_qa, prompt, attempt,
                                          static_cast<int>(k));
                rec.source = "synthetic/guidelines_qa";
                rec.question_type = QuestionType::mcq;
                rec.gold_label = letter;
                rec.messages = {Message{Role::user, pair.question},
                                Message{Role::assistant, pair.answer}};
                rec.synthetic =
                    SyntheticInfo{SynthComponent::guidelines_qa, opts.teacher_model, attempt};
                out.records.push_back(std::move(rec));
                ++kept;
            }
            if (!batch.skipped.empty()) {
                out.log.detail += std::to_string(batch.skipped.size()) + " malformed blocks; ";
            }
            if (kept > 0) {
                out.log.outcome = "accepted";
                return;
            }
        }
        out.log.outcome = out.log.outcome.empty() ? "rejected" : out.log.outcome;
    });

    return detail::assemble(std::move(jobs), opts);
}

// Open-ended vignette stems seeded from the moove training split. Only the
// question stem is generated; assistant responses are produced downstream.
inline SynthResult run_moove(const std::vector<ChatRecord>& pool, const SynthOptions& opts,
                             Gateway& gateway) {
    std::vector<ChatRecord> usable;
    for (const ChatRecord& r : pool) {
        if (r.first_user()) usable.push_back(r);
    }
    const PromptTemplate tmpl = default_template(SynthComponent::moove, opts.date, opts.reasoning);
    std::vector<detail::JobResult> jobs(static_cast<size_t>(opts.target_count));
    Rng base(opts.seed);

    detail::parallel_jobs(opts.target_count, opts.max_in_flight, [&](long job) {
        detail::JobResult& out = jobs[static_cast<size_t>(job)];
        out.log.job = job;
        const uint64_t draw_seed = base.fork(static_cast<uint64_t>(job)).seed();
        ExemplarDraw draw = draw_exemplars(usable, PoolId::moove_train, draw_seed);
        std::vector<Exemplar> exemplars;
        for (size_t idx : draw.exemplar_indices) {
            exemplars.push_back(Exemplar{usable[idx].first_user()->content, ""});
        }
        ChatRequest prompt = build_moove_prompt(tmpl, exemplars, opts.teacher_model, opts.temperature);
        prompt.seed_tag = "synth/moove/" + std::to_string(job);

        for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
            out.log.attempts = attempt;
            ChatResponse resp = gateway.complete(prompt);
            if (!resp.ok()) continue;
            auto stem = parse_question_block(resp.text);
            if (!stem) continue;
            ChatRecord rec;
            rec.id = detail::synth_id(SynthComponent::moove, prompt, attempt);
            rec.source = "synthetic/moove";
            rec.question_type = QuestionType::open;
            rec.messages = {Message{Role::user, *stem}};
            rec.synthetic = SyntheticInfo{SynthComponent::moove, opts.teacher_model, attempt};
            out.records.push_back(std::move(rec));
            out.log.outcome = "accepted";
            return;
        }
        out.log.outcome = "rejected";
    });

    return detail::assemble(std::move(jobs), opts);
}

inline SynthResult run_synth(const std::vector<ChatRecord>& pool,
                             const std::vector<GuidelineDoc>& docs, const SynthOptions& opts,
                             Gateway& gateway) {
    switch (opts.component) {
        case SynthComponent::curated_qa: return run_curated(pool, opts, gateway);
        case SynthComponent::guidelines_qa: return run_guidelines(docs, opts, gateway);
        case SynthComponent::moove: return run_moove(pool, opts, gateway);
    }
    throw Error("unknown synth component");
}

// Human-readable export of the sampled audit items.
inline std::string review_bundle_markdown(const SynthResult& result) {
    std::string md = "# Clinician review bundle\n";
    md += "\nSampled " + std::to_string(result.review_indices.size()) + " of " +
          std::to_string(result.records.size()) + " accepted items.\n";
    for (size_t idx : result.review_indices) {
        const ChatRecord& r = result.records[idx];
        md += "\n---\n\n## " + r.id + "\n\n";
        md += "- source: " + r.source + "\n";
        md += "- question_type: " + std::string(to_string(r.question_type)) + "\n";
        if (r.gold_label) md += "- gold_label: " + *r.gold_label + "\n";
        if (r.synthetic) {
            md += "- teacher: " + r.synthetic->teacher + "\n";
            md += "- attempts_used: " + std::to_string(r.synthetic->attempts_used) + "\n";
        }
        for (const Message& m : r.messages) {
            md += "\n**" + std::string(to_string(m.role)) + "**\n\n" + m.content + "\n";
        }
    }
    return md;
}

}  // namespace medforge
