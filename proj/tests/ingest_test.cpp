#include "medforge/ingest.hpp"

#include <gtest/gtest.h>

#include "medforge/corpus_io.hpp"
#include "support/tmpdir.hpp"

namespace medforge {
namespace {

using testsupport::TmpDir;

std::vector<ChatRecord> run_ingest(const SourceSpec& spec, IngestReport* report_out = nullptr) {
    std::vector<ChatRecord> records;
    IngestReport report = ingest_dataset(spec, [&](ChatRecord&& r) { records.push_back(std::move(r)); });
    if (report_out) *report_out = report;
    return records;
}

SourceSpec spec_for(const std::string& path, SourceSchema schema,
                    const std::string& name = "fixture") {
    SourceSpec spec;
    spec.dataset_name = name;
    spec.schema = schema;
    spec.input_path = path;
    return spec;
}

TEST(IngestMcq, IndexToLetterMapping) {
    TmpDir tmp("ingest");
    Json item{{"question", "Pick the second option."},
              {"options", Json::array({"alpha", "beta", "gamma", "delta"})},
              {"answer_idx", 2}};
    const std::string path = tmp.write("mcq.jsonl", item.dump() + "\n");
    auto records = run_ingest(spec_for(path, SourceSchema::mcq_options_label));
    ASSERT_EQ(records.size(), 1u);
    const ChatRecord& r = records[0];
    EXPECT_EQ(r.question_type, QuestionType::mcq);
    EXPECT_EQ(r.gold_label, "C");
    const std::string& user = r.messages[0].content;
    for (const char* needle : {"A) alpha", "B) beta", "C) gamma", "D) delta"}) {
        EXPECT_NE(user.find(needle), std::string::npos) << needle;
    }
    EXPECT_EQ(r.messages[1].content, "Answer: C");
}

TEST(IngestMcq, LetterMappingIsABijection) {
    for (size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(option_index(option_letter(i)), i);
    }
    for (char c = 'A'; c <= 'E'; ++c) {
        EXPECT_EQ(option_letter(*option_index(c)), c);
    }
    EXPECT_FALSE(option_index('F').has_value());
}

TEST(IngestMcq, ExamShapeFixtureTenItems) {
    TmpDir tmp("ingest");
    // Letter-keyed options with letter answer_idx and answer text, the shape
    // used by USMLE-style exam dumps.
    std::string content;
    for (int i = 0; i < 10; ++i) {
        Json item{{"question", "Case " + std::to_string(i) + ": best next step?"},
                  {"options", Json{{"A", "observe"}, {"B", "operate"}, {"C", "medicate"},
                                   {"D", "refer"}, {"E", "discharge"}}},
                  {"answer_idx", std::string(1, static_cast<char>('A' + i % 5))},
                  {"answer", i % 5 == 0 ? "observe" : ""}};
        if (item["answer"].get<std::string>().empty()) item.erase("answer");
        content += item.dump() + "\n";
    }
    const std::string path = tmp.write("exam.jsonl", content);
    IngestReport report;
    auto records = run_ingest(spec_for(path, SourceSchema::mcq_options_label, "examfix"), &report);
    EXPECT_EQ(report.read, 10);
    EXPECT_EQ(report.emitted, 10);
    EXPECT_EQ(report.discarded, 0);
    ASSERT_EQ(records.size(), 10u);
    EXPECT_EQ(records[0].id, "examfix/train/0");
    EXPECT_EQ(records[9].id, "examfix/train/9");
    EXPECT_EQ(records[3].gold_label, "D");
}

TEST(IngestMcq, RationalePlacedBeforeAnswerLine) {
    TmpDir tmp("ingest");
    Json item{{"question", "Q"},
              {"options", Json::array({"x", "y"})},
              {"answer_idx", 1},
              {"rationale", "Step by step, y is right."}};
    const std::string path = tmp.write("rat.jsonl", item.dump() + "\n");
    auto records = run_ingest(spec_for(path, SourceSchema::mcq_options_label));
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].messages[1].content, "Step by step, y is right.\n\nAnswer: B");
}

TEST(IngestMcq, DiscardRulesNeverFatal) {
    TmpDir tmp("ingest");
    std::string content;
    content += Json{{"question", "no options"}, {"answer_idx", 0}}.dump() + "\n";
    content += Json{{"question", "too many"},
                    {"options", Json::array({"a", "b", "c", "d", "e", "f"})},
                    {"answer_idx", 0}}
                   .dump() + "\n";
    content += Json{{"question", "no label"}, {"options", Json::array({"a", "b"})}}.dump() + "\n";
    content += Json{{"question", "out of range"},
                    {"options", Json::array({"a", "b"})},
                    {"answer_idx", 5}}
                   .dump() + "\n";
    content += Json{{"question", "ok"}, {"options", Json::array({"a", "b"})}, {"answer_idx", 0}}
                   .dump() + "\n";
    const std::string path = tmp.write("discards.jsonl", content);
    IngestReport report;
    auto records = run_ingest(spec_for(path, SourceSchema::mcq_options_label), &report);
    EXPECT_EQ(report.read, 5);
    EXPECT_EQ(report.emitted, 1);
    EXPECT_EQ(report.discarded, 4);
    EXPECT_EQ(report.discard_reasons.at("missing_options"), 1);
    EXPECT_EQ(report.discard_reasons.at("too_many_options"), 1);
    EXPECT_EQ(report.discard_reasons.at("missing_gold_label"), 1);
    EXPECT_EQ(report.discard_reasons.at("label_out_of_range"), 1);
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].id, "fixture/train/4");  // original index preserved
}

TEST(IngestMcq, WrongTypeIsSchemaMismatchFatal) {
    TmpDir tmp("ingest");
    Json item{{"question", 42}, {"options", Json::array({"a", "b"})}, {"answer_idx", 0}};
    const std::string path = tmp.write("fatal.jsonl", item.dump() + "\n");
    EXPECT_THROW(run_ingest(spec_for(path, SourceSchema::mcq_options_label)), Error);
}

TEST(IngestMcq, ConservationHoldsOnMixedInput) {
    TmpDir tmp("ingest");
    std::string content;
    for (int i = 0; i < 20; ++i) {
        if (i % 3 == 0) {
            content += Json{{"question", "broken " + std::to_string(i)}}.dump() + "\n";
        } else {
            content += Json{{"question", "q" + std::to_string(i)},
                            {"options", Json::array({"a", "b", "c"})},
                            {"answer_idx", i % 3}}
                           .dump() + "\n";
        }
    }
    const std::string path = tmp.write("mixed.jsonl", content);
    IngestReport report;
    run_ingest(spec_for(path, SourceSchema::mcq_options_label), &report);
    EXPECT_EQ(report.read, report.emitted + report.discarded);
    EXPECT_EQ(report.read, 20);
}

TEST(IngestMcq, DeterministicOutputBytes) {
    TmpDir tmp("ingest");
    std::string content;
    for (int i = 0; i < 8; ++i) {
        content += Json{{"question", "q" + std::to_string(i)},
                        {"options", Json::array({"a", "b", "c"})},
                        {"answer_idx", i % 3}}
                       .dump() + "\n";
    }
    const std::string path = tmp.write("det.jsonl", content);
    auto emit = [&](const std::string& out) {
        std::vector<ChatRecord> records = run_ingest(spec_for(path, SourceSchema::mcq_options_label));
        write_corpus(records, out);
        return testsupport::slurp(out);
    };
    EXPECT_EQ(emit(tmp.file("a.jsonl")), emit(tmp.file("b.jsonl")));
}

TEST(IngestContextQa, MapsContextQuestionAnswer) {
    TmpDir tmp("ingest");
    Json item{{"context", "Trial abstract text."},
              {"question", "Does it work?"},
              {"answer", "yes"},
              {"long_answer", "The trial showed a benefit."}};
    const std::string path = tmp.write("cqa.jsonl", item.dump() + "\n");
    auto records = run_ingest(spec_for(path, SourceSchema::context_question_answer));
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].question_type, QuestionType::open);
    EXPECT_EQ(records[0].gold_label, "yes");
    EXPECT_EQ(records[0].messages[0].content, "Trial abstract text.\n\nDoes it work?");
    EXPECT_EQ(records[0].messages[1].content, "The trial showed a benefit.\n\nAnswer: yes");
}

TEST(IngestConsumerQa, MultiTurnFollowups) {
    TmpDir tmp("ingest");
    Json item{{"question", "Is fever dangerous?"},
              {"answer", "Usually not."},
              {"followups", Json::array({Json{{"question", "When should I worry?"},
                                              {"answer", "Above 40C see a doctor."}}})}};
    const std::string path = tmp.write("consumer.jsonl", item.dump() + "\n");
    auto records = run_ingest(spec_for(path, SourceSchema::consumer_qa));
    ASSERT_EQ(records.size(), 1u);
    ASSERT_EQ(records[0].messages.size(), 4u);
    EXPECT_EQ(records[0].messages[2].role, Role::user);
    EXPECT_EQ(records[0].messages[2].content, "When should I worry?");
    EXPECT_FALSE(records[0].gold_label.has_value());
}

TEST(IngestGuidelines, ThreeDocumentFixture) {
    TmpDir tmp("ingest");
    std::string content;
    content += Json{{"institution", "WHO"}, {"text", "Rehydrate early and often."}}.dump() + "\n";
    content += Json{{"institution", "CDC"}, {"text", "Isolate suspected cases."}}.dump() + "\n";
    content += Json{{"institution", "NICE"}, {"text", "Escalate on red flags."}}.dump() + "\n";
    const std::string path = tmp.write("docs.jsonl", content);
    SourceSpec spec = spec_for(path, SourceSchema::guideline_corpus, "guide");
    DefaultTokenizer tokenizer;
    std::vector<GuidelineDoc> docs;
    IngestReport report =
        ingest_guidelines(spec, tokenizer, [&](GuidelineDoc&& d) { docs.push_back(std::move(d)); });
    ASSERT_EQ(docs.size(), 3u);
    EXPECT_EQ(report.emitted, 3);
    EXPECT_EQ(docs[0].institution, "WHO");
    EXPECT_EQ(docs[1].institution, "CDC");
    EXPECT_EQ(docs[2].institution, "NICE");
    EXPECT_EQ(docs[0].token_count, 4);
}

TEST(IngestGuidelines, TokenCountMatchesTokenizer) {
    TmpDir tmp("ingest");
    const std::string body = "Fever >38.5C: give antipyretics.";
    const std::string path = tmp.write(
        "one.jsonl", Json{{"institution", "WHO"}, {"text", body}}.dump() + "\n");
    DefaultTokenizer tokenizer;
    std::vector<GuidelineDoc> docs;
    ingest_guidelines(spec_for(path, SourceSchema::guideline_corpus), tokenizer,
                      [&](GuidelineDoc&& d) { docs.push_back(std::move(d)); });
    ASSERT_EQ(docs.size(), 1u);
    EXPECT_EQ(docs[0].token_count, static_cast<long>(tokenizer.tokenize(body).size()));
}

TEST(IngestGuidelines, EmptyBodyDiscarded) {
    TmpDir tmp("ingest");
    const std::string path = tmp.write(
        "empty.jsonl", Json{{"institution", "WHO"}, {"text", "  "}}.dump() + "\n");
    DefaultTokenizer tokenizer;
    std::vector<GuidelineDoc> docs;
    IngestReport report = ingest_guidelines(spec_for(path, SourceSchema::guideline_corpus),
                                            tokenizer, [&](GuidelineDoc&& d) { docs.push_back(std::move(d)); });
    EXPECT_TRUE(docs.empty());
    EXPECT_EQ(report.discarded, 1);
    EXPECT_EQ(report.discard_reasons.at("empty_body"), 1);
}

TEST(IngestGuidelines, PerInstitutionCountsOnBalancedFixture) {
    TmpDir tmp("ingest");
    std::string content;
    for (int inst = 0; inst < 16; ++inst) {
        for (int d = 0; d < 2; ++d) {
            content += Json{{"institution", "inst" + std::to_string(inst)},
                            {"text", "Guideline body " + std::to_string(inst) + "/" + std::to_string(d)}}
                           .dump() + "\n";
        }
    }
    const std::string path = tmp.write("balanced.jsonl", content);
    DefaultTokenizer tokenizer;
    std::map<std::string, int> per_institution;
    ingest_guidelines(spec_for(path, SourceSchema::guideline_corpus), tokenizer,
                      [&](GuidelineDoc&& d) { ++per_institution[d.institution]; });
    EXPECT_EQ(per_institution.size(), 16u);
    for (const auto& [inst, count] : per_institution) {
        EXPECT_EQ(count, 2) << inst;
    }
}

TEST(IngestReportJson, ExpectedCountMismatchWarnsOnly) {
    TmpDir tmp("ingest");
    Json item{{"question", "q"}, {"options", Json::array({"a", "b"})}, {"answer_idx", 0}};
    const std::string path = tmp.write("warn.jsonl", item.dump() + "\n");
    SourceSpec spec = spec_for(path, SourceSchema::mcq_options_label);
    spec.expected_count = 5;
    IngestReport report;
    auto records = run_ingest(spec, &report);
    EXPECT_EQ(records.size(), 1u);
    ASSERT_EQ(report.warnings.size(), 1u);
    EXPECT_NE(report.warnings[0].find("expected 5"), std::string::npos);
}

}  // namespace
}  // namespace medforge
