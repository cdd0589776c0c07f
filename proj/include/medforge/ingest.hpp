#pragma once

// Adapters that normalize raw source-dataset files into ChatRecords.
// Adapters are declared per schema family, not per named dataset; items
// that cannot be unambiguously mapped are discarded with a reason and the
// conservation identity read = emitted + discarded always holds.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "medforge/chat_record.hpp"
#include "medforge/tokenizer.hpp"
#include "medforge/util.hpp"

namespace medforge {

enum class SourceSchema { mcq_options_label, context_question_answer, consumer_qa, guideline_corpus };

inline const char* to_string(SourceSchema s) {
    switch (s) {
        case SourceSchema::mcq_options_label: return "mcq_options_label";
        case SourceSchema::context_question_answer: return "context_question_answer";
        case SourceSchema::consumer_qa: return "consumer_qa";
        case SourceSchema::guideline_corpus: return "guideline_corpus";
    }
    return "?";
}

inline std::optional<SourceSchema> source_schema_from_string(std::string_view s) {
    if (s == "mcq_options_label") return SourceSchema::mcq_options_label;
    if (s == "context_question_answer") return SourceSchema::context_question_answer;
    if (s == "consumer_qa") return SourceSchema::consumer_qa;
    if (s == "guideline_corpus") return SourceSchema::guideline_corpus;
    return std::nullopt;
}

struct SourceSpec {
    std::string dataset_name;
    SourceSchema schema = SourceSchema::mcq_options_label;
    std::string input_path;
    std::optional<long> expected_count;
    std::string split = "train";
};

struct IngestReport {
    std::string dataset_name;
    long read = 0;
    long emitted = 0;
    long discarded = 0;
    std::map<std::string, long> discard_reasons;
    std::vector<std::string> warnings;

    void discard(const std::string& reason) {
        ++discarded;
        ++discard_reasons[reason];
    }

    Json to_json() const {
        Json j{{"dataset_name", dataset_name},
               {"read", read},
               {"emitted", emitted},
               {"discarded", discarded},
               {"discard_reasons", discard_reasons}};
        if (!warnings.empty()) j["warnings"] = warnings;
        return j;
    }
};

inline char option_letter(size_t index) {
    if (index > 4) throw Error("option index out of range");
    return static_cast<char>('A' + index);
}

inline std::optional<size_t> option_index(char letter) {
    if (letter >= 'A' && letter <= 'E') return static_cast<size_t>(letter - 'A');
    if (letter >= 'a' && letter <= 'e') return static_cast<size_t>(letter - 'a');
    return std::nullopt;
}

namespace detail {

class IngestErrorAt : public Error {
public:
    IngestErrorAt(const std::string& what, size_t line)
        : Error(what + " (line " + std::to_string(line) + ")") {}
};

// Distinguishes "field absent / value unmappable" (item discarded) from
// "present field with the wrong JSON type" (schema mismatch, fatal).
inline std::optional<std::string> opt_text(const Json& item, const char* key, size_t line) {
    if (!item.contains(key)) return std::nullopt;
    if (!item[key].is_string()) {
        throw IngestErrorAt(std::string("schema mismatch: field '") + key + "' must be a string", line);
    }
    std::string v = trim(item[key].get<std::string>());
    if (v.empty()) return std::nullopt;
    return v;
}

struct McqItem {
    std::string question;
    std::vector<std::string> options;  // index order, letters A.. by position
    size_t answer_index = 0;
    std::optional<std::string> rationale;
};

// Returns the parsed item or a discard reason.
inline std::variant<McqItem, std::string> parse_mcq_item(const Json& item, size_t line) {
    McqItem out;
    auto q = opt_text(item, "question", line);
    if (!q) return std::string("missing_question");
    out.question = *q;

    if (!item.contains("options")) return std::string("missing_options");
    const Json& opts = item["options"];
    if (opts.is_array()) {
        for (const auto& o : opts) {
            if (!o.is_string()) throw IngestErrorAt("schema mismatch: options must be strings", line);
            out.options.push_back(trim(o.get<std::string>()));
        }
    } else if (opts.is_object()) {
        // Letter-keyed options must form a contiguous run from 'A'.
        std::vector<std::pair<char, std::string>> entries;
        for (auto it = opts.begin(); it != opts.end(); ++it) {
            if (it.key().size() != 1 || !option_index(it.key()[0])) {
                return std::string("non_letter_option_key");
            }
            if (!it.value().is_string()) {
                throw IngestErrorAt("schema mismatch: options must be strings", line);
            }
            entries.emplace_back(static_cast<char>(std::toupper(it.key()[0])),
                                 trim(it.value().get<std::string>()));
        }
        std::sort(entries.begin(), entries.end());
        for (size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != static_cast<char>('A' + i)) {
                return std::string("non_contiguous_option_keys");
            }
            out.options.push_back(entries[i].second);
        }
    } else {
        throw IngestErrorAt("schema mismatch: 'options' must be an array or object", line);
    }
    if (out.options.size() > 5) return std::string("too_many_options");
    if (out.options.size() < 2) return std::string("too_few_options");
    for (const auto& o : out.options) {
        if (o.empty()) return std::string("empty_option_text");
    }

    // Label: integer index, letter, or exact option text.
    std::optional<size_t> idx;
    for (const char* key : {"answer_idx", "label", "answer"}) {
        if (!item.contains(key)) continue;
        const Json& v = item[key];
        std::optional<size_t> parsed;
        if (v.is_number_integer()) {
            long raw = v.get<long>();
            if (raw < 0 || static_cast<size_t>(raw) >= out.options.size()) {
                return std::string("label_out_of_range");
            }
            parsed = static_cast<size_t>(raw);
        } else if (v.is_string()) {
            std::string s = trim(v.get<std::string>());
            if (s.size() == 1 && option_index(s[0])) {
                parsed = option_index(s[0]);
                if (*parsed >= out.options.size()) return std::string("label_out_of_range");
            } else {
                size_t hits = 0, hit_at = 0;
                for (size_t i = 0; i < out.options.size(); ++i) {
                    if (out.options[i] == s) {
                        ++hits;
                        hit_at = i;
                    }
                }
                if (hits == 1) parsed = hit_at;
                else if (hits > 1) return std::string("ambiguous_label");
                else continue;  // free text that names no option: try next key
            }
        } else {
            throw IngestErrorAt(std::string("schema mismatch: label field '") + key +
                                    "' must be an integer or string",
                                line);
        }
        if (idx && parsed && *idx != *parsed) return std::string("conflicting_labels");
        if (parsed) idx = parsed;
    }
    if (!idx) return std::string("missing_gold_label");
    out.answer_index = *idx;

    for (const char* key : {"rationale", "explanation"}) {
        if (auto r = opt_text(item, key, line)) {
            out.rationale = r;
            break;
        }
    }
    return out;
}

inline std::string options_block(const std::vector<std::string>& options) {
    std::string block;
    for (size_t i = 0; i < options.size(); ++i) {
        if (i) block += '\n';
        block += option_letter(i);
        block += ") ";
        block += options[i];
    }
    return block;
}

// Source rationale verbatim, blank line, then the uniform answer line.
inline std::string assistant_text(const std::optional<std::string>& rationale,
                                  const std::string& answer_line) {
    if (rationale) return *rationale + "\n\n" + answer_line;
    return answer_line;
}

}  // namespace detail

// Streams every line of a JSONL file as a parsed object. Invalid JSON is a
// fatal error; blank lines are skipped.
inline void for_each_jsonl_item(const std::string& path,
                                const std::function<void(const Json&, size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("cannot open input: " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim_view(line).empty()) continue;
        Json item;
        try {
            item = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!item.is_object()) {
            throw Error(path + ":" + std::to_string(line_no) + ": schema mismatch: item is not an object");
        }
        fn(item, line_no);
    }
}

// Converts one source file into ChatRecords. Emitted records always satisfy
// the record invariants; unmappable items are discarded, never fatal.
inline IngestReport ingest_dataset(const SourceSpec& spec,
                                   const std::function<void(ChatRecord&&)>& sink) {
    if (spec.schema == SourceSchema::guideline_corpus) {
        throw Error("guideline_corpus inputs go through ingest_guidelines");
    }
    IngestReport report;
    report.dataset_name = spec.dataset_name;
    long index = 0;

    for_each_jsonl_item(spec.input_path, [&](const Json& item, size_t line) {
        const long item_index = index++;
        ++report.read;
        ChatRecord r;
        r.id = spec.dataset_name + "/" + spec.split + "/" + std::to_string(item_index);
        r.source = spec.dataset_name;

        if (auto sys = detail::opt_text(item, "system", line)) {
            r.messages.push_back(Message{Role::system, *sys});
        }

        switch (spec.schema) {
            case SourceSchema::mcq_options_label: {
                auto parsed = detail::parse_mcq_item(item, line);
                if (std::holds_alternative<std::string>(parsed)) {
                    report.discard(std::get<std::string>(parsed));
                    return;
                }
                const auto& mcq = std::get<detail::McqItem>(parsed);
                r.question_type = QuestionType::mcq;
                const char letter = option_letter(mcq.answer_index);
                r.gold_label = std::string(1, letter);
                r.messages.push_back(
                    Message{Role::user, mcq.question + "\n\n" + detail::options_block(mcq.options)});
                r.messages.push_back(Message{
                    Role::assistant,
                    detail::assistant_text(mcq.rationale, std::string("Answer: ") + letter)});
                break;
            }
            case SourceSchema::context_question_answer: {
                auto question = detail::opt_text(item, "question", line);
                auto answer = detail::opt_text(item, "answer", line);
                if (!question) {
                    report.discard("missing_question");
                    return;
                }
                if (!answer) {
                    report.discard("missing_answer");
                    return;
                }
                auto context = detail::opt_text(item, "context", line);
                auto long_answer = detail::opt_text(item, "long_answer", line);
                r.question_type = QuestionType::open;
                r.gold_label = *answer;
                r.messages.push_back(Message{
                    Role::user, context ? *context + "\n\n" + *question : *question});
                r.messages.push_back(Message{
                    Role::assistant,
                    detail::assistant_text(long_answer, "Answer: " + *answer)});
                break;
            }
            case SourceSchema::consumer_qa: {
                auto question = detail::opt_text(item, "question", line);
                auto answer = detail::opt_text(item, "answer", line);
                if (!question) {
                    report.discard("missing_question");
                    return;
                }
                if (!answer) {
                    report.discard("missing_answer");
                    return;
                }
                r.question_type = QuestionType::open;
                r.messages.push_back(Message{Role::user, *question});
                r.messages.push_back(Message{Role::assistant, *answer});
                if (item.contains("followups")) {
                    if (!item["followups"].is_array()) {
                        throw detail::IngestErrorAt("schema mismatch: 'followups' must be an array", line);
                    }
                    for (const auto& turn : item["followups"]) {
                        if (!turn.is_object()) {
                            throw detail::IngestErrorAt("schema mismatch: followup turns must be objects", line);
                        }
                        auto fq = detail::opt_text(turn, "question", line);
                        auto fa = detail::opt_text(turn, "answer", line);
                        if (!fq || !fa) {
                            report.discard("incomplete_followup_turn");
                            return;
                        }
                        r.messages.push_back(Message{Role::user, *fq});
                        r.messages.push_back(Message{Role::assistant, *fa});
                    }
                }
                break;
            }
            case SourceSchema::guideline_corpus:
                return;  // unreachable, guarded above
        }

        if (auto bad = violated_invariant(r)) {
            report.discard("invariant:" + *bad);
            return;
        }
        ++report.emitted;
        sink(std::move(r));
    });

    if (spec.expected_count && report.emitted != *spec.expected_count) {
        report.warnings.push_back("expected " + std::to_string(*spec.expected_count) +
                                  " records, emitted " + std::to_string(report.emitted));
    }
    return report;
}

// Guideline corpus inputs: one document per line with institution tag and
// body text; token_count comes from the configured tokenizer.
inline IngestReport ingest_guidelines(const SourceSpec& spec, const Tokenizer& tokenizer,
                                      const std::function<void(GuidelineDoc&&)>& sink) {
    if (spec.schema != SourceSchema::guideline_corpus) {
        throw Error("ingest_guidelines requires the guideline_corpus schema");
    }
    IngestReport report;
    report.dataset_name = spec.dataset_name;
    long index = 0;

    for_each_jsonl_item(spec.input_path, [&](const Json& item, size_t line) {
        const long item_index = index++;
        ++report.read;
        auto text = detail::opt_text(item, "text", line);
        if (!text) {
            report.discard("empty_body");
            return;
        }
        auto institution = detail::opt_text(item, "institution", line);
        if (!institution) {
            report.discard("missing_institution");
            return;
        }
        GuidelineDoc doc;
        auto id = detail::opt_text(item, "id", line);
        doc.id = id ? *id : spec.dataset_name + "/" + spec.split + "/" + std::to_string(item_index);
        doc.institution = *institution;
        doc.text = *text;
        doc.token_count = static_cast<long>(tokenizer.tokenize(doc.text).size());
        ++report.emitted;
        sink(std::move(doc));
    });

    if (spec.expected_count && report.emitted != *spec.expected_count) {
        report.warnings.push_back("expected " + std::to_string(*spec.expected_count) +
                                  " documents, emitted " + std::to_string(report.emitted));
    }
    return report;
}

}  // namespace medforge
