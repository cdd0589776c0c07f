#pragma once

// Generation prompt templates for the three synthetic pipelines. The texts
// are fixed; only the declared slots ({date}, {reasoning}, {guideline_text},
// exemplar blocks) vary at runtime. Golden-file tests pin the assembled
// bytes, so edit with care.

#include <string>
#include <vector>

#include "medforge/chat_record.hpp"
#include "medforge/gateway.hpp"
#include "medforge/util.hpp"

namespace medforge {

inline constexpr const char* kSharedSystemTemplate =
    "You are ChatGPT, a large language model trained by OpenAI.\n"
    "Knowledge cutoff: 2024-06\n"
    "Current date: {date}\n"
    "Reasoning: {reasoning}\n"
    "\n"
    "# Valid channels: analysis, commentary, final.\n"
    "# Channel must be included for every message.";

inline constexpr const char* kGuidelinesDeveloper =
    "You are an expert medical educator and physician tasked with creating\n"
    "high-quality, clinically accurate content for a medical exam. Your task\n"
    "is to generate clinical vignette-style questions along with its correct\n"
    "answer, based STRICTLY on the provided medical guideline. Focus on\n"
    "realistic patient presentations (age, symptoms, physical exam findings),\n"
    "identifying 'red flags', and diagnostic reasoning highlighted in the\n"
    "text. The timeline and objective progress should always be clear and\n"
    "detailed in the vignettes. Include clear context about site and where\n"
    "people travelled etc. Do not include outside information or unproven\n"
    "treatments.";

inline constexpr const char* kGuidelinesUserTemplate =
    "Here is the medical guideline:\n"
    "\n"
    "=== GUIDELINE START ===\n"
    "{guideline_text}\n"
    "=== GUIDELINE END ===\n"
    "\n"
    "Based ONLY on the guideline above, generate exactly 10 unique\n"
    "MULTIPLE-CHOICE clinical vignette questions and their answers. Each\n"
    "question should present a realistic patient scenario that tests the\n"
    "diagnostic or management principles in the text. For each vignette,\n"
    "provide 4-5 plausible multiple-choice options (A-E). Ensure distractors\n"
    "represent common diagnostic pitfalls or 'next best steps' that are\n"
    "incorrect based strictly on the provided guideline.\n"
    "\n"
    "You MUST format EACH of the 10 items exactly as follows, using these\n"
    "specific XML tags:\n"
    "\n"
    "<qa>\n"
    "<question>\n"
    "Patient scenario and the specific question here.\n"
    "A) [Option 1]\n"
    "B) [Option 2]\n"
    "C) [Option 3]\n"
    "D) [Option 4]\n"
    "</question>\n"
    "<answer>The rationale explaining your chain of thought without\n"
    "mentioning the guideline and then Answer: correct answer</answer>\n"
    "</qa>";

inline constexpr const char* kCuratedDeveloper =
    "You are an expert medical educator and physician tasked with creating\n"
    "high-quality, clinically accurate content for a medical exam. Your task\n"
    "is to generate a new, unique, clinical vignette-style question along\n"
    "with its evidence-based correct answer. The timeline and progress\n"
    "should always be clear and detailed in the vignettes. Include clear\n"
    "context about site and where people travelled etc. The content must\n"
    "reflect realistic clinical scenarios, standard-of-care protocols, and\n"
    "well established medical consensus. Avoid scientifically controversial\n"
    "treatments. You will be provided with 5 examples. Use them strictly to\n"
    "understand the desired format, diagnostic difficulty, and clinical\n"
    "depth. DO NOT copy them. Generate a completely new, scientifically\n"
    "rigorous question that would be unconditionally approved by a medical\n"
    "review board.";

inline constexpr const char* kCuratedUserHeader =
    "Here are example questions and answers to model your format on:\n";

inline constexpr const char* kCuratedLabeledInstruction =
    "Now generate a brand new, unique, and clinically accurate\n"
    "MULTIPLE-CHOICE medical question and its detailed answer.\n"
    "Ensure the answer matches the formatting tags above.";

inline constexpr const char* kCuratedUnlabeledInstruction =
    "Now generate a brand new, unique, and clinically accurate\n"
    "OPEN-ENDED medical question and its detailed answer.\n"
    "Ensure the answer matches the formatting tags above.";

inline constexpr const char* kMooveDeveloper =
    "You are an expert medical educator and physician tasked with creating\n"
    "high-quality, clinically accurate content. Your task is to generate a\n"
    "new, unique, and realistic medical scenario or question prompt. The\n"
    "content must reflect realistic clinical presentations, inquiries from\n"
    "colleagues, or patient encounters. The timeline and objective progress\n"
    "should always be clear and detailed. Include clear context about site\n"
    "and where people travelled etc. You will be provided with 5 examples.\n"
    "Use them strictly to understand the desired format, diagnostic\n"
    "difficulty, and clinical depth. DO NOT copy them. Generate a completely\n"
    "new question that would be unconditionally approved by a medical review\n"
    "board.";

inline constexpr const char* kMooveUserHeader =
    "Here are example prompts to model your format and clinical depth on:\n";

inline constexpr const char* kMooveInstruction =
    "Now, acting as an expert medical educator, generate a brand new, unique,\n"
    "and clinically accurate medical scenario or question. Wrap your\n"
    "generated scenario strictly within <question> and </question> tags.";

struct PromptTemplate {
    SynthComponent component = SynthComponent::curated_qa;
    std::string system_text;     // with {date}/{reasoning} slots filled
    std::string developer_text;
    std::string date;
    std::string reasoning;
};

inline PromptTemplate default_template(SynthComponent component, const std::string& date,
                                       const std::string& reasoning = "low") {
    PromptTemplate t;
    t.component = component;
    t.date = date;
    t.reasoning = reasoning;
    t.system_text = fill_slot(fill_slot(kSharedSystemTemplate, "date", date), "reasoning", reasoning);
    switch (component) {
        case SynthComponent::curated_qa: t.developer_text = kCuratedDeveloper; break;
        case SynthComponent::guidelines_qa: t.developer_text = kGuidelinesDeveloper; break;
        case SynthComponent::moove: t.developer_text = kMooveDeveloper; break;
    }
    return t;
}

struct Exemplar {
    std::string question;
    std::string answer;  // unused for moove exemplars
};

namespace detail {

inline ChatRequest assemble(const PromptTemplate& t, std::string user_text,
                            const std::string& model, double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.messages.push_back(ReqMessage{ReqRole::system, t.system_text});
    req.messages.push_back(ReqMessage{ReqRole::developer, t.developer_text});
    req.messages.push_back(ReqMessage{ReqRole::user, std::move(user_text)});
    return req;
}

}  // namespace detail

// Five exemplar blocks in draw order, then the instruction variant for the
// labeled (multiple-choice) or unlabeled (open-ended) bucket.
inline ChatRequest build_curated_prompt(const PromptTemplate& t,
                                        const std::vector<Exemplar>& exemplars, bool labeled,
                                        const std::string& model, double temperature) {
    if (t.component != SynthComponent::curated_qa) throw Error("template/component mismatch");
    if (exemplars.size() != 5) throw Error("curated prompt requires exactly 5 exemplars");
    std::string user = kCuratedUserHeader;
    for (size_t i = 0; i < exemplars.size(); ++i) {
        user += "\n--- Example " + std::to_string(i + 1) + " ---\n";
        user += "<question>" + exemplars[i].question + "\n";
        user += "<answer>" + exemplars[i].answer + "\n";
    }
    user += "\n";
    user += labeled ? kCuratedLabeledInstruction : kCuratedUnlabeledInstruction;
    return detail::assemble(t, std::move(user), model, temperature);
}

// One full guideline between the start/end markers, then the fixed task text.
inline ChatRequest build_guideline_prompt(const PromptTemplate& t, const GuidelineDoc& doc,
                                          const std::string& model, double temperature) {
    if (t.component != SynthComponent::guidelines_qa) throw Error("template/component mismatch");
    return detail::assemble(t, fill_slot(kGuidelinesUserTemplate, "guideline_text", doc.text),
                            model, temperature);
}

// Five exemplar prompt stems, then the open-ended instruction.
inline ChatRequest build_moove_prompt(const PromptTemplate& t,
                                      const std::vector<Exemplar>& exemplars,
                                      const std::string& model, double temperature) {
    if (t.component != SynthComponent::moove) throw Error("template/component mismatch");
    if (exemplars.size() != 5) throw Error("moove prompt requires exactly 5 exemplars");
    std::string user = kMooveUserHeader;
    for (size_t i = 0; i < exemplars.size(); ++i) {
        user += "\n--- Example " + std::to_string(i + 1) + " ---\n";
        user += "<question>\n" + exemplars[i].question + "\n</question>\n";
    }
    user += "\n";
    user += kMooveInstruction;
    return detail::assemble(t, std::move(user), model, temperature);
}

}  // namespace medforge
