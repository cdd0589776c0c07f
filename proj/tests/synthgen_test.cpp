#include "medforge/synthgen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

namespace medforge {
namespace {

std::vector<ChatRecord> make_pool(int n, bool mcq, const std::string& prefix) {
    std::vector<ChatRecord> pool;
    for (int i = 0; i < n; ++i) {
        ChatRecord r;
        r.id = prefix + "/train/" + std::to_string(i);
        r.source = prefix;
        if (mcq) {
            r.question_type = QuestionType::mcq;
            const char letter = static_cast<char>('A' + i % 4);
            r.gold_label = std::string(1, letter);
            r.messages = {Message{Role::user, "MCQ stem " + std::to_string(i) +
                                                  "\n\nA) a\nB) b\nC) c\nD) d"},
                          Message{Role::assistant,
                                  "Because of reasons.\n\nAnswer: " + std::string(1, letter)}};
        } else {
            r.question_type = QuestionType::open;
            r.messages = {Message{Role::user, "Open question " + std::to_string(i)},
                          Message{Role::assistant, "Open reply " + std::to_string(i)}};
        }
        pool.push_back(std::move(r));
    }
    return pool;
}

// ---------------------------------------------------------------------------
// draw_exemplars

TEST(DrawExemplars, PoolOfExactlyFiveReturnsAllFive) {
    auto pool = make_pool(5, true, "p");
    ExemplarDraw draw = draw_exemplars(pool, PoolId::labeled, 42);
    ASSERT_EQ(draw.exemplar_ids.size(), 5u);
    std::set<std::string> ids(draw.exemplar_ids.begin(), draw.exemplar_ids.end());
    EXPECT_EQ(ids.size(), 5u);
}

TEST(DrawExemplars, SameSeedSameDraw) {
    auto pool = make_pool(30, true, "p");
    ExemplarDraw a = draw_exemplars(pool, PoolId::labeled, 7);
    ExemplarDraw b = draw_exemplars(pool, PoolId::labeled, 7);
    EXPECT_EQ(a.exemplar_ids, b.exemplar_ids);
    ExemplarDraw c = draw_exemplars(pool, PoolId::labeled, 8);
    EXPECT_NE(a.exemplar_ids, c.exemplar_ids);
}

TEST(DrawExemplars, PoolTooSmallThrows) {
    auto pool = make_pool(4, true, "p");
    EXPECT_THROW(draw_exemplars(pool, PoolId::labeled, 1), Error);
}

// Monte Carlo vs the hypergeometric expectation: drawing 5 of 20 includes
// each item with probability 0.25.
TEST(DrawExemplars, InclusionFrequencyMatchesHypergeometric) {
    auto pool = make_pool(20, true, "p");
    std::map<std::string, int> inclusion;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        ExemplarDraw draw = draw_exemplars(pool, PoolId::labeled, 1000 + d);
        for (const auto& id : draw.exemplar_ids) ++inclusion[id];
    }
    for (const auto& r : pool) {
        const double freq = static_cast<double>(inclusion[r.id]) / draws;
        EXPECT_NEAR(freq, 0.25, 0.02) << r.id;
    }
}

// Exchangeability: over a pool of 8, every 5-subset is equally likely
// (chi-squared against the uniform over the 56 subsets).
TEST(DrawExemplars, EverySubsetEquallyLikely) {
    auto pool = make_pool(8, true, "p");
    std::map<std::set<std::string>, int> counts;
    const int per_subset = 200;
    const int draws = 56 * per_subset;
    for (int d = 0; d < draws; ++d) {
        ExemplarDraw draw = draw_exemplars(pool, PoolId::labeled, 50000 + d);
        counts[std::set<std::string>(draw.exemplar_ids.begin(), draw.exemplar_ids.end())]++;
    }
    EXPECT_EQ(counts.size(), 56u);
    double chi2 = 0.0;
    for (const auto& [_, obs] : counts) {
        const double diff = obs - per_subset;
        chi2 += diff * diff / per_subset;
    }
    // df=55; the 99.9th percentile is ~93. Seeded, so this is deterministic.
    EXPECT_LT(chi2, 93.0);
}

// ---------------------------------------------------------------------------
// parse_guideline_batch

std::string qa_block(int i, const std::string& letter) {
    return "<qa>\n<question>\nVignette " + std::to_string(i) +
           "?\nA) one\nB) two\nC) three\nD) four\n</question>\n<answer>Reasoning " +
           std::to_string(i) + ". Answer: " + letter + "</answer>\n</qa>\n";
}

TEST(ParseGuidelineBatch, TenWellFormedBlocks) {
    std::string raw;
    for (int i = 0; i < 10; ++i) raw += qa_block(i, std::string(1, 'A' + i % 4));
    GuidelineBatch batch = parse_guideline_batch(raw);
    EXPECT_TRUE(batch.ok());
    ASSERT_EQ(batch.pairs.size(), 10u);
    EXPECT_TRUE(batch.skipped.empty());
    EXPECT_NE(batch.pairs[3].question.find("Vignette 3?"), std::string::npos);
    EXPECT_NE(batch.pairs[3].answer.find("Answer: D"), std::string::npos);
}

TEST(ParseGuidelineBatch, MissingAnswerCloseTagSkipsThatBlock) {
    std::string raw;
    for (int i = 0; i < 10; ++i) {
        std::string block = qa_block(i, "B");
        if (i == 4) {
            size_t pos = block.find("</answer>");
            block.erase(pos, 9);
        }
        raw += block;
    }
    GuidelineBatch batch = parse_guideline_batch(raw);
    EXPECT_EQ(batch.pairs.size(), 9u);
    ASSERT_EQ(batch.skipped.size(), 1u);
    EXPECT_NE(batch.skipped[0].find("</answer>"), std::string::npos);
}

TEST(ParseGuidelineBatch, EmptyTextIsParseFailure) {
    GuidelineBatch batch = parse_guideline_batch("");
    EXPECT_FALSE(batch.ok());
    EXPECT_TRUE(batch.pairs.empty());
}

// ---------------------------------------------------------------------------
// extract_answer

TEST(ExtractAnswer, RationaleThenLetter) {
    EXPECT_EQ(extract_answer("Long rationale here. Answer: C", "mcq"), "C");
}

// Hand-evaluated oracle list: last occurrence wins, parentheses and case are
// tolerated, out-of-range letters never match.
TEST(ExtractAnswer, FixtureSetAgainstHandOracle) {
    const std::vector<std::pair<std::string, std::optional<std::string>>> cases = {
        {"Answer: A ... later we revise ... Answer: D", "D"},
        {"answer: b", "B"},
        {"Answer: (E)", "E"},
        {"Answer:C", "C"},
        {"the answer is unclear", std::nullopt},
        {"Answer: F", std::nullopt},
        {"ANSWER:  (a)", "A"},
        {"No marker at all", std::nullopt},
        {"Answer: A, but actually Answer: (B)", "B"},
        {"", std::nullopt},
    };
    for (const auto& [raw, expected] : cases) {
        EXPECT_EQ(extract_answer(raw, "mcq"), expected) << raw;
    }
}

TEST(ExtractAnswer, OpenFamilyTakesTextAfterFinalMarker) {
    EXPECT_EQ(extract_answer("Reasoning.\n\nAnswer: supportive care and fluids", "open"),
              "supportive care and fluids");
    EXPECT_EQ(extract_answer("No marker, whole text wins", "open"), "No marker, whole text wins");
    EXPECT_EQ(extract_answer("", "open"), std::nullopt);
}

TEST(ExtractAnswer, UnknownFamilyThrows) {
    EXPECT_THROW(extract_answer("Answer: A", "unregistered"), Error);
}

// ---------------------------------------------------------------------------
// rejection_sample

ChatRequest simple_prompt(const std::string& tag) {
    ChatRequest req;
    req.model = "teacher";
    req.seed_tag = tag;
    req.messages.push_back(ReqMessage{ReqRole::user, "generate"});
    return req;
}

TEST(RejectionSample, AcceptedOnFirstAttempt) {
    MockGateway gw;
    ChatRequest prompt = simple_prompt("t1");
    ChatRequest keyed = prompt;
    keyed.temperature = 0.7;
    gw.script(keyed, {MockReply{"Answer: C"}});
    RejectionOutcome outcome = rejection_sample(prompt, "C", gw);
    EXPECT_TRUE(outcome.accepted);
    EXPECT_EQ(outcome.attempts_used(), 1);
    EXPECT_TRUE(outcome.attempts[0].matched);
    EXPECT_EQ(outcome.attempts[0].extracted, "C");
}

TEST(RejectionSample, EightWrongAnswersExhaustAttempts) {
    MockGateway gw;
    ChatRequest prompt = simple_prompt("t2");
    ChatRequest keyed = prompt;
    keyed.temperature = 0.7;
    gw.script(keyed, {MockReply{"Answer: B"}});
    RejectionOutcome outcome = rejection_sample(prompt, "C", gw);
    EXPECT_FALSE(outcome.accepted);
    EXPECT_EQ(outcome.attempts_used(), 8);
    EXPECT_FALSE(outcome.final_record.has_value());
}

TEST(RejectionSample, GoldComparisonIsCaseInsensitive) {
    MockGateway gw;
    ChatRequest prompt = simple_prompt("t3");
    ChatRequest keyed = prompt;
    keyed.temperature = 0.7;
    gw.script(keyed, {MockReply{"Answer: a"}});
    EXPECT_TRUE(rejection_sample(prompt, "A", gw).accepted);
}

TEST(RejectionSample, TransportFailureCountsAsFailedAttempt) {
    MockGateway gw(RetryPolicy{1, 0, 2.0, false});  // no internal retries
    ChatRequest prompt = simple_prompt("t4");
    ChatRequest keyed = prompt;
    keyed.temperature = 0.7;
    gw.script(keyed, {MockReply{.transport_error = true}, MockReply{"Answer: C"}});
    RejectionOutcome outcome = rejection_sample(prompt, "C", gw);
    EXPECT_TRUE(outcome.accepted);
    EXPECT_EQ(outcome.attempts_used(), 2);
    EXPECT_FALSE(outcome.attempts[0].matched);
}

TEST(RejectionSample, EmptyGoldThrows) {
    MockGateway gw;
    EXPECT_THROW(rejection_sample(simple_prompt("t5"), "", gw), Error);
}

// Acceptance probability under i.i.d. per-attempt success p is 1 - (1-p)^8.
TEST(RejectionSampleStatistics, MatchesTruncatedGeometricModel) {
    struct Case {
        double p;
        double tolerance;
    };
    for (const Case c : {Case{0.2, 0.02}, Case{0.5, 0.005}, Case{0.9, 0.002}}) {
        MockGateway gw;
        Rng rng(static_cast<uint64_t>(c.p * 1000) + 77);
        const int jobs = 3000;
        for (int j = 0; j < jobs; ++j) {
            ChatRequest keyed = simple_prompt("stat/" + std::to_string(j));
            keyed.temperature = 0.7;
            std::vector<MockReply> replies;
            for (int attempt = 0; attempt < 8; ++attempt) {
                replies.push_back(MockReply{rng.bernoulli(c.p) ? "Answer: A" : "Answer: B"});
            }
            gw.script(keyed, std::move(replies));
        }
        long accepted = 0;
        for (int j = 0; j < jobs; ++j) {
            if (rejection_sample(simple_prompt("stat/" + std::to_string(j)), "A", gw).accepted) {
                ++accepted;
            }
        }
        const double expected = 1.0 - std::pow(1.0 - c.p, 8);
        EXPECT_NEAR(static_cast<double>(accepted) / jobs, expected, c.tolerance) << "p=" << c.p;
    }
}

// ---------------------------------------------------------------------------
// PositionMonitor

TEST(PositionMonitor, UniformLettersStayQuiet) {
    PositionMonitor monitor(PositionMonitorOptions{"ABCD", 0.25, 200});
    Rng rng(33);
    for (int i = 0; i < 1000; ++i) {
        monitor.observe(static_cast<char>('A' + rng.bounded(4)));
    }
    EXPECT_LT(monitor.deviation(), 0.25);
    EXPECT_FALSE(monitor.alerting());
    EXPECT_TRUE(monitor.alerts().empty());
}

TEST(PositionMonitor, DegenerateSingleLetterAlertsAtDeviationThree) {
    PositionMonitor monitor(PositionMonitorOptions{"ABCD", 0.25, 200});
    for (int i = 0; i < 1000; ++i) monitor.observe('C');
    EXPECT_DOUBLE_EQ(monitor.deviation(), 3.0);  // |1000 - 250| / 250
    EXPECT_TRUE(monitor.alerting());
    ASSERT_FALSE(monitor.alerts().empty());
    EXPECT_EQ(monitor.alerts()[0].window, 200);  // fires as soon as warm-up ends
}

TEST(PositionMonitor, WarmupWindowSuppressesAlerts) {
    PositionMonitor monitor(PositionMonitorOptions{"ABCD", 0.25, 200});
    for (int i = 0; i < 100; ++i) monitor.observe('A');
    EXPECT_GT(monitor.deviation(), 0.25);
    EXPECT_FALSE(monitor.alerting());
    EXPECT_TRUE(monitor.alerts().empty());
}

TEST(MonitorPositions, RejectsNonMcqRecords) {
    auto pool = make_pool(3, false, "open");
    EXPECT_THROW(monitor_positions(pool), Error);
}

// ---------------------------------------------------------------------------
// Generation drivers with a scripted teacher

SynthOptions fast_opts(SynthComponent component, int target) {
    SynthOptions opts;
    opts.component = component;
    opts.teacher_model = "mock-teacher";
    opts.seed = 99;
    opts.target_count = target;
    opts.max_in_flight = 1;
    opts.review_every = 2;
    opts.monitor.min_window = 200;
    return opts;
}

TEST(RunCurated, LabeledJobsAnchorGoldToFirstExemplar) {
    auto pool = make_pool(12, true, "lab");
    MockGateway gw;
    // Reply echoes the first extracted letter in the prompt, which is the
    // first exemplar's answer line, so attempt 1 always matches the anchor.
    gw.script_rule(R"(Answer:\s*\(?([A-E])\)?)",
                   {MockReply{"<question>New vignette?\nA) x\nB) y\nC) z\nD) w\n"
                              "<answer>Fresh reasoning.\n\nAnswer: $1</answer>"}});
    SynthResult result = run_curated(pool, fast_opts(SynthComponent::curated_qa, 6), gw);
    EXPECT_EQ(result.jobs, 6);
    EXPECT_EQ(result.accepted_jobs, 6);
    ASSERT_EQ(result.records.size(), 6u);
    std::set<std::string> ids;
    for (const ChatRecord& r : result.records) {
        EXPECT_EQ(r.question_type, QuestionType::mcq);
        ASSERT_TRUE(r.gold_label.has_value());
        // Re-extraction from the assistant text is a fixed point.
        EXPECT_EQ(extract_answer(r.messages.back().content, "mcq"), r.gold_label);
        ASSERT_TRUE(r.synthetic.has_value());
        EXPECT_EQ(r.synthetic->component, SynthComponent::curated_qa);
        EXPECT_EQ(r.synthetic->teacher, "mock-teacher");
        EXPECT_EQ(r.synthetic->attempts_used, 1);
        EXPECT_EQ(r.id.rfind("synth/curated_qa/", 0), 0u);
        ids.insert(r.id);
    }
    EXPECT_EQ(ids.size(), result.records.size());
}

TEST(RunCurated, UnlabeledJobsAcceptFirstParseableOutput) {
    auto pool = make_pool(12, false, "unl");
    MockGateway gw;
    gw.script_rule("OPEN-ENDED",
                   {MockReply{"<question>What should the on-call nurse do first?"
                              "<answer>Assess airway, then escalate."}});
    SynthResult result = run_curated(pool, fast_opts(SynthComponent::curated_qa, 4), gw);
    EXPECT_EQ(result.accepted_jobs, 4);
    for (const ChatRecord& r : result.records) {
        EXPECT_EQ(r.question_type, QuestionType::open);
        EXPECT_FALSE(r.gold_label.has_value());
    }
}

TEST(RunCurated, RejectionAfterMaxAttempts) {
    auto pool = make_pool(12, true, "lab");
    MockGateway gw;
    gw.script_default(MockReply{"no tags and no letter"});
    SynthOptions opts = fast_opts(SynthComponent::curated_qa, 3);
    opts.max_attempts = 4;
    SynthResult result = run_curated(pool, opts, gw);
    EXPECT_EQ(result.accepted_jobs, 0);
    EXPECT_EQ(result.rejected_jobs, 3);
    EXPECT_TRUE(result.records.empty());
    for (const auto& log : result.logs) EXPECT_EQ(log.attempts, 4);
}

TEST(RunCurated, DeterministicAcrossRuns) {
    auto pool = make_pool(12, true, "lab");
    auto run_once = [&] {
        MockGateway gw;
        gw.script_rule(R"(Answer:\s*\(?([A-E])\)?)",
                       {MockReply{"<question>Q\n<answer>R.\n\nAnswer: $1</answer>"}});
        SynthResult result = run_curated(pool, fast_opts(SynthComponent::curated_qa, 5), gw);
        std::vector<std::string> ids;
        for (const auto& r : result.records) ids.push_back(r.id);
        return ids;
    };
    EXPECT_EQ(run_once(), run_once());
}

TEST(RunGuidelines, TenPairsPerDocumentSelfConsistentGold) {
    std::vector<GuidelineDoc> docs = {GuidelineDoc{"g/0", "WHO", "Treat sepsis early.", 3},
                                      GuidelineDoc{"g/1", "CDC", "Hydrate cholera patients.", 3}};
    MockGateway gw;
    std::string reply;
    for (int i = 0; i < 10; ++i) reply += qa_block(i, std::string(1, 'A' + i % 4));
    gw.script_rule("GUIDELINE START", {MockReply{reply}});
    SynthResult result = run_guidelines(docs, fast_opts(SynthComponent::guidelines_qa, 0), gw);
    EXPECT_EQ(result.jobs, 2);
    EXPECT_EQ(result.accepted_jobs, 2);
    ASSERT_EQ(result.records.size(), 20u);
    for (const ChatRecord& r : result.records) {
        EXPECT_EQ(r.question_type, QuestionType::mcq);
        EXPECT_EQ(extract_answer(r.messages.back().content, "mcq"), r.gold_label);
        EXPECT_EQ(r.synthetic->component, SynthComponent::guidelines_qa);
    }
    // Monitor saw all twenty accepted letters.
    EXPECT_EQ(result.monitor.window(), 20);
}

TEST(RunGuidelines, PairsWithoutExtractableLetterDiscarded) {
    std::vector<GuidelineDoc> docs = {GuidelineDoc{"g/0", "WHO", "Body.", 1}};
    MockGateway gw;
    std::string reply = qa_block(0, "B") +
                        "<qa>\n<question>\nQ?\nA) x\nB) y\n</question>\n"
                        "<answer>No letter given here.</answer>\n</qa>\n";
    gw.script_rule("GUIDELINE START", {MockReply{reply}});
    SynthResult result = run_guidelines(docs, fast_opts(SynthComponent::guidelines_qa, 0), gw);
    EXPECT_EQ(result.records.size(), 1u);
    ASSERT_EQ(result.logs.size(), 1u);
    EXPECT_NE(result.logs[0].detail.find("no extractable letter"), std::string::npos);
}

TEST(RunMoove, GeneratesStemOnlyRecords) {
    auto pool = make_pool(10, false, "moove");
    MockGateway gw;
    gw.script_rule("within <question> and </question>",
                   {MockReply{"channel final\n<question>A 44-year-old farmer presents after a "
                              "snakebite in rural Laos. What is your management plan?</question>"}});
    SynthResult result = run_moove(pool, fast_opts(SynthComponent::moove, 4), gw);
    EXPECT_EQ(result.accepted_jobs, 4);
    for (const ChatRecord& r : result.records) {
        ASSERT_EQ(r.messages.size(), 1u);
        EXPECT_EQ(r.messages[0].role, Role::user);
        EXPECT_EQ(r.question_type, QuestionType::open);
        EXPECT_EQ(r.synthetic->component, SynthComponent::moove);
        EXPECT_EQ(violated_invariant(r), std::nullopt);
    }
}

TEST(ReviewBundle, EveryNthAcceptedItemExported) {
    auto pool = make_pool(12, true, "lab");
    MockGateway gw;
    gw.script_rule(R"(Answer:\s*\(?([A-E])\)?)",
                   {MockReply{"<question>Q\n<answer>R.\n\nAnswer: $1</answer>"}});
    SynthOptions opts = fast_opts(SynthComponent::curated_qa, 5);
    opts.review_every = 2;
    SynthResult result = run_curated(pool, opts, gw);
    ASSERT_EQ(result.records.size(), 5u);
    EXPECT_EQ(result.review_indices, (std::vector<size_t>{1, 3}));
    const std::string md = review_bundle_markdown(result);
    EXPECT_NE(md.find(result.records[1].id), std::string::npos);
    EXPECT_EQ(md.find(result.records[0].id), std::string::npos);
}

}  // namespace
}  // namespace medforge
