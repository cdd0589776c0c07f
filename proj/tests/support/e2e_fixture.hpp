#pragma once

// Deterministic 200-record end-to-end fixture: raw source files in the three
// supported schemas, a guideline corpus, benchmark reference prompts with
// planted contamination, mock scripts for every model role, and the run
// config wiring them together. All content derives from a fixed seed.

#include <string>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/rng.hpp"
#include "medforge/util.hpp"
#include "tmpdir.hpp"

namespace testsupport {

struct E2eFixture {
    std::string dir;
    std::string config;
    std::string refs;
};

inline std::string sentence(medforge::Rng& rng, int words, const std::string& topic) {
    static const char* kFiller[] = {"presents", "with", "worsening", "symptoms", "over",
                                    "two",      "days", "after",     "travel",   "to",
                                    "a",        "rural", "clinic",   "despite",  "initial",
                                    "care",     "at",    "home",     "and",      "rest"};
    std::string out = topic;
    for (int i = 0; i < words; ++i) {
        out += ' ';
        out += kFiller[rng.bounded(std::size(kFiller))];
        out += std::to_string(rng.bounded(97));
    }
    return out;
}

inline E2eFixture make_e2e_fixture(const TmpDir& tmp) {
    using medforge::Json;
    medforge::Rng rng(424242);

    static const char* kTopics[] = {"crushing chest pain", "breathless cough",
                                    "throbbing headache", "spiking fever",
                                    "roadside collapse"};

    // Benchmark reference prompts; six get planted into the mcq file.
    std::vector<std::string> refs;
    std::string refs_content;
    for (int i = 0; i < 10; ++i) {
        std::string prompt = "benchmark item " + std::to_string(i);
        for (int w = 0; w < 22; ++w) prompt += " bench" + std::to_string(rng.bounded(900));
        refs.push_back(prompt);
        refs_content += prompt + "\n";
    }
    const std::string refs_path = tmp.write("refs.txt", refs_content);

    // 120 mcq items, 6 of them exact copies of benchmark prompts.
    std::string mcq;
    for (int i = 0; i < 120; ++i) {
        std::string question;
        if (i % 20 == 10) {
            question = refs[static_cast<size_t>(i / 20)];
        } else {
            question = "Case " + std::to_string(i) + ": a patient with " +
                       sentence(rng, 10, kTopics[i % 5]) + ". What is the next step?";
        }
        Json item{{"question", question},
                  {"options", Json::array({"observe at home", "start antibiotics",
                                           "urgent referral", "order imaging"})},
                  {"answer_idx", static_cast<int>(rng.bounded(4))},
                  {"rationale", "Guided by the presentation, option review follows."}};
        mcq += item.dump() + "\n";
    }
    tmp.write("raw_mcq.jsonl", mcq);

    // 40 consumer questions.
    std::string consumer;
    for (int i = 0; i < 40; ++i) {
        consumer += Json{{"question", "Is " + sentence(rng, 6, kTopics[i % 5]) + " serious?"},
                         {"answer", "It depends; " + sentence(rng, 8, "seek care") + "."}}
                        .dump() + "\n";
    }
    tmp.write("raw_consumer.jsonl", consumer);

    // 40 context/question/answer items.
    std::string cqa;
    for (int i = 0; i < 40; ++i) {
        cqa += Json{{"context", "Abstract: " + sentence(rng, 14, kTopics[(i + 2) % 5]) + "."},
                    {"question", "Does the intervention help?"},
                    {"answer", i % 2 == 0 ? "yes" : "no"},
                    {"long_answer", "The cohort showed " + sentence(rng, 6, "an effect") + "."}}
                   .dump() + "\n";
    }
    tmp.write("raw_cqa.jsonl", cqa);

    // Six guideline documents.
    std::string guides;
    static const char* kInstitutions[] = {"WHO", "CDC", "NICE", "ECDC", "PAHO", "MSF"};
    for (int i = 0; i < 6; ++i) {
        guides += Json{{"institution", kInstitutions[i]},
                       {"text", "Guideline " + std::to_string(i) + ": " +
                                    sentence(rng, 30, kTopics[i % 5]) + "."}}
                      .dump() + "\n";
    }
    tmp.write("raw_guidelines.jsonl", guides);

    // Teacher mock: guideline batches, moove stems, open-ended pairs, and a
    // letter echo for labeled curated generation (the first extracted answer
    // in the prompt is the first exemplar's, i.e. the anchor gold).
    std::string guideline_reply;
    for (int i = 0; i < 10; ++i) {
        guideline_reply += "<qa>\n<question>\nVignette " + std::to_string(i) +
                           " from the guideline: what next?\nA) watch\nB) treat\nC) refer\nD) "
                           "test\n</question>\n<answer>Stepwise reasoning " + std::to_string(i) +
                           ". Answer: " + std::string(1, 'A' + i % 4) + "</answer>\n</qa>\n";
    }
    Json teacher{{"rules", Json::array({
        Json{{"pattern", "GUIDELINE START"}, {"reply", guideline_reply}},
        Json{{"pattern", "clinical depth on:[\\s\\S]*chest pain"},
             {"reply", "<question>Walk me through the chest pain pathway for a "
                       "55-year-old arriving at a rural clinic two hours after "
                       "onset.</question>"}},
        Json{{"pattern", "clinical depth on:[\\s\\S]*headache"},
             {"reply", "<question>A febrile child in a low-resource clinic develops "
                       "a stiff neck overnight. What do you do first?</question>"}},
        Json{{"pattern", "within <question> and </question> tags"},
             {"reply", "<question>A clinician in a remote district asks about "
                       "escalation thresholds for a deteriorating patient. Outline "
                       "your assessment and plan.</question>"}},
        Json{{"pattern", "OPEN-ENDED"},
             {"reply", "<question>How should chronic breathlessness be assessed in "
                       "primary care?\n<answer>Start with history, spirometry, and "
                       "targeted review of red flags."}},
        Json{{"pattern", R"(Answer:\s*\(?([A-E]))"},
             {"reply", "<question>A new exam vignette: which option is correct?\nA) "
                       "first\nB) second\nC) third\nD) fourth\n<answer>Updated "
                       "reasoning chain.\n\nAnswer: $1</answer>"}}})}};
    tmp.write("mock_teacher.json", teacher.dump(2));

    Json annotator{{"rules", Json::array({
        Json{{"pattern", "Axis: specialty[\\s\\S]*chest pain"}, {"reply", "Cardiology"}},
        Json{{"pattern", "Axis: specialty[\\s\\S]*(breathless|cough)"}, {"reply", "Pulmonology"}},
        Json{{"pattern", "Axis: specialty[\\s\\S]*headache"}, {"reply", "Neurology"}},
        Json{{"pattern", "Axis: specialty[\\s\\S]*fever"}, {"reply", "Infectious diseases"}},
        Json{{"pattern", "Axis: specialty"}, {"reply", "General medicine"}},
        Json{{"pattern", "Axis: urgency[\\s\\S]*collapse"}, {"reply", "emergency"}},
        Json{{"pattern", "Axis: urgency[\\s\\S]*(chest pain|fever)"}, {"reply", "urgent"}},
        Json{{"pattern", "Axis: urgency"}, {"reply", "routine"}},
        Json{{"pattern", "Axis: difficulty[\\s\\S]*vignette"}, {"reply", "4"}},
        Json{{"pattern", "Axis: difficulty[\\s\\S]*collapse"}, {"reply", "5"}},
        Json{{"pattern", "Axis: difficulty"}, {"reply", "2"}}})}};
    tmp.write("mock_annotator.json", annotator.dump(2));

    Json model_a{{"default",
                  "Assessment: obtain vitals, focused exam, point-of-care tests; escalate "
                  "early if red flags appear and document the timeline."}};
    Json model_b{{"default",
                  "Reassure the patient, advise rest and fluids, and review in two weeks "
                  "unless symptoms change."}};
    tmp.write("mock_model_a.json", model_a.dump(2));
    tmp.write("mock_model_b.json", model_b.dump(2));

    auto judge_reply = [](const std::string& winner, int m1, int m2) {
        std::string out = "Considering all nine criteria.\n\n";
        static const char* kCriteria[] = {
            "Question comprehension", "Logical reasoning", "Relevance and completeness",
            "Harmlessness",           "Fairness",          "Contextual awareness",
            "Communication",          "Clarity",           "Alignment with guidelines"};
        for (const char* c : kCriteria) {
            out += std::string(c) + ": " + std::to_string(m1) + "/" + std::to_string(m2) + "\n";
        }
        out += "WINNER: " + winner;
        return out;
    };
    Json judge{{"rules", Json::array({
        Json{{"pattern", "escalation thresholds"}, {"reply", judge_reply("Model 1", 4, 3)}},
        Json{{"pattern", "chest pain pathway"}, {"reply", judge_reply("Model 2", 2, 4)}},
        Json{{"pattern", "stiff neck"}, {"reply", judge_reply("Tie", 3, 3)}},
        Json{{"pattern", "[\\s\\S]*"}, {"reply", judge_reply("Tie", 3, 3)}}})}};
    tmp.write("mock_judge.json", judge.dump(2));

    Json config{
        {"seeds", Json{{"synth", 2024}, {"arena", 7}, {"bootstrap", 99}}},
        {"decontam", Json{{"n", 8}, {"tau", 0.5}}},
        {"datasets",
         Json{{"mcq", Json{{"schema", "mcq_options_label"}, {"input_path", "raw_mcq.jsonl"},
                           {"dataset_name", "exam_pool"}}},
              {"consumer", Json{{"schema", "consumer_qa"}, {"input_path", "raw_consumer.jsonl"},
                                {"dataset_name", "consumer_pool"}}},
              {"cqa", Json{{"schema", "context_question_answer"}, {"input_path", "raw_cqa.jsonl"},
                           {"dataset_name", "abstract_pool"}}},
              {"guides", Json{{"schema", "guideline_corpus"}, {"input_path", "raw_guidelines.jsonl"},
                              {"dataset_name", "guideline_pool"}}}}},
        {"endpoints",
         Json{{"teacher", Json{{"backend", "mock"}, {"model", "mock-teacher"},
                               {"script", "mock_teacher.json"}}},
              {"annotator", Json{{"backend", "mock"}, {"model", "mock-annotator"},
                                 {"script", "mock_annotator.json"}}},
              {"model_a", Json{{"backend", "mock"}, {"model", "alpha-model"},
                               {"script", "mock_model_a.json"}}},
              {"model_b", Json{{"backend", "mock"}, {"model", "beta-model"},
                               {"script", "mock_model_b.json"}}},
              {"judge", Json{{"backend", "mock"}, {"model", "mock-judge"},
                             {"script", "mock_judge.json"}}}}},
        {"synth", Json{{"target_count", 20}, {"max_attempts", 8}, {"temperature", 0.7},
                       {"date", "2025-06-01"}, {"reasoning", "low"}, {"review_every", 10},
                       {"max_in_flight", 4}, {"monitor_letters", "ABCD"},
                       {"monitor_min_window", 200}}},
        {"profiler", Json{{"axes", Json::array({"specialty", "urgency", "difficulty"})},
                          {"vocab", Json{{"specialty",
                                          Json::array({"Cardiology", "Pulmonology", "Neurology",
                                                       "Infectious diseases", "General medicine"})},
                                         {"urgency", Json::array({"routine", "urgent",
                                                                  "emergency"})}}},
                          {"max_in_flight", 4}}},
        {"arena", Json{{"max_in_flight", 4}, {"temperature", 0.0}, {"response_temperature", 0.0}}},
        {"validate", Json{{"min_triplets", 10}}}};
    const std::string config_path = tmp.write("config.json", config.dump(2));

    return E2eFixture{tmp.dir(), config_path, refs_path};
}

}  // namespace testsupport
