#pragma once

// Unified conversational record model. Every pipeline stage consumes and
// produces ChatRecords; GuidelineDoc seeds the guideline generation pipeline.

#include <optional>
#include <string>
#include <vector>

#include "medforge/util.hpp"
#include "medforge/version.hpp"

namespace medforge {

enum class Role { system, user, assistant };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "?";
}

inline std::optional<Role> role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    return std::nullopt;
}

struct Message {
    Role role = Role::user;
    std::string content;  // trimmed, non-empty UTF-8

    friend bool operator==(const Message&, const Message&) = default;
};

enum class QuestionType { mcq, open };

inline const char* to_string(QuestionType q) {
    return q == QuestionType::mcq ? "mcq" : "open";
}

inline std::optional<QuestionType> question_type_from_string(std::string_view s) {
    if (s == "mcq") return QuestionType::mcq;
    if (s == "open") return QuestionType::open;
    return std::nullopt;
}

enum class SynthComponent { curated_qa, guidelines_qa, moove };

inline const char* to_string(SynthComponent c) {
    switch (c) {
        case SynthComponent::curated_qa: return "curated_qa";
        case SynthComponent::guidelines_qa: return "guidelines_qa";
        case SynthComponent::moove: return "moove";
    }
    return "?";
}

inline std::optional<SynthComponent> synth_component_from_string(std::string_view s) {
    if (s == "curated_qa") return SynthComponent::curated_qa;
    if (s == "guidelines_qa") return SynthComponent::guidelines_qa;
    if (s == "moove") return SynthComponent::moove;
    return std::nullopt;
}

// Present on a record iff its provenance is synthetic.
struct SyntheticInfo {
    SynthComponent component = SynthComponent::curated_qa;
    std::string teacher;
    int attempts_used = 1;

    friend bool operator==(const SyntheticInfo&, const SyntheticInfo&) = default;
};

struct AnnotationProfile {
    std::string specialty;
    std::string urgency;
    int difficulty = 0;  // 1-5 when set, 0 = unannotated
    std::string geographic_context;
    std::string resource_setting;
    std::string level_of_care;
    std::string severity;
    std::string question_type_label;
    std::string demographics;

    friend bool operator==(const AnnotationProfile&, const AnnotationProfile&) = default;
};

struct ChatRecord {
    std::string id;
    std::string source;
    std::vector<Message> messages;
    QuestionType question_type = QuestionType::open;
    std::optional<std::string> gold_label;
    std::optional<SyntheticInfo> synthetic;  // nullopt = source provenance
    std::optional<AnnotationProfile> annotations;
    Json extra = Json::object();  // unknown top-level fields, round-tripped

    friend bool operator==(const ChatRecord&, const ChatRecord&) = default;

    const Message* first_user() const {
        for (const auto& m : messages) {
            if (m.role == Role::user) return &m;
        }
        return nullptr;
    }
    const Message* first_assistant() const {
        for (const auto& m : messages) {
            if (m.role == Role::assistant) return &m;
        }
        return nullptr;
    }
};

// Returns a description of the first violated invariant, or nullopt if valid.
inline std::optional<std::string> violated_invariant(const ChatRecord& r) {
    if (r.id.empty()) return "id is empty";
    if (r.source.empty()) return "source is empty";
    if (r.messages.empty()) return "messages is empty";
    bool saw_non_system = false;
    for (size_t i = 0; i < r.messages.size(); ++i) {
        const Message& m = r.messages[i];
        if (m.content.empty()) return "message content is empty";
        if (trim_view(m.content).size() != m.content.size()) {
            return "message content has leading/trailing whitespace";
        }
        if (i > 0 && r.messages[i - 1].role == m.role) {
            return "two consecutive messages share a role";
        }
        if (!saw_non_system && m.role != Role::system) {
            if (m.role != Role::user) return "first non-system message must be user";
            saw_non_system = true;
        }
    }
    if (!saw_non_system) return "no user message";
    if (r.question_type == QuestionType::mcq) {
        if (!r.gold_label || r.gold_label->size() != 1 || (*r.gold_label)[0] < 'A' ||
            (*r.gold_label)[0] > 'E') {
            return "mcq record requires gold_label in A-E";
        }
    }
    if (r.synthetic) {
        if (r.synthetic->teacher.empty()) return "synthetic provenance requires teacher";
        if (r.synthetic->attempts_used < 1) return "attempts_used must be >= 1";
    }
    if (r.annotations && r.annotations->difficulty != 0 &&
        (r.annotations->difficulty < 1 || r.annotations->difficulty > 5)) {
        return "annotation difficulty must be in 1-5";
    }
    return std::nullopt;
}

namespace detail {

inline Json annotations_to_json(const AnnotationProfile& a) {
    Json j = Json::object();
    auto put = [&](const char* k, const std::string& v) {
        if (!v.empty()) j[k] = v;
    };
    put("specialty", a.specialty);
    put("urgency", a.urgency);
    if (a.difficulty != 0) j["difficulty"] = a.difficulty;
    put("geographic_context", a.geographic_context);
    put("resource_setting", a.resource_setting);
    put("level_of_care", a.level_of_care);
    put("severity", a.severity);
    put("question_type_label", a.question_type_label);
    put("demographics", a.demographics);
    return j;
}

inline AnnotationProfile annotations_from_json(const Json& j) {
    AnnotationProfile a;
    auto get = [&](const char* k, std::string& out) {
        if (j.contains(k)) {
            if (!j[k].is_string()) throw Error(std::string("annotations.") + k + " must be a string");
            out = j[k].get<std::string>();
        }
    };
    get("specialty", a.specialty);
    get("urgency", a.urgency);
    if (j.contains("difficulty")) {
        if (!j["difficulty"].is_number_integer()) throw Error("annotations.difficulty must be an integer");
        a.difficulty = j["difficulty"].get<int>();
    }
    get("geographic_context", a.geographic_context);
    get("resource_setting", a.resource_setting);
    get("level_of_care", a.level_of_care);
    get("severity", a.severity);
    get("question_type_label", a.question_type_label);
    get("demographics", a.demographics);
    return a;
}

}  // namespace detail

inline const char* const kKnownRecordFields[] = {"format", "id", "source", "messages",
                                                 "question_type", "gold_label", "provenance",
                                                 "annotations"};

inline Json record_to_json(const ChatRecord& r) {
    Json j = Json::object();
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it) j[it.key()] = it.value();
    j["format"] = kCorpusFormatVersion;
    j["id"] = r.id;
    j["source"] = r.source;
    j["question_type"] = to_string(r.question_type);
    if (r.gold_label) j["gold_label"] = *r.gold_label;
    Json msgs = Json::array();
    for (const auto& m : r.messages) {
        msgs.push_back(Json{{"role", to_string(m.role)}, {"content", m.content}});
    }
    j["messages"] = std::move(msgs);
    if (r.synthetic) {
        j["provenance"] = Json{{"kind", "synthetic"},
                               {"component", to_string(r.synthetic->component)},
                               {"teacher", r.synthetic->teacher},
                               {"attempts_used", r.synthetic->attempts_used}};
    } else {
        j["provenance"] = Json{{"kind", "source"}};
    }
    if (r.annotations) j["annotations"] = detail::annotations_to_json(*r.annotations);
    return j;
}

// Parses and normalizes one record object. Throws Error with the reason on
// any malformed field; callers attach line numbers.
inline ChatRecord record_from_json(const Json& j) {
    if (!j.is_object()) throw Error("record is not a JSON object");
    if (!j.contains("format")) throw Error("missing required field 'format'");
    if (!j["format"].is_number_integer() || j["format"].get<int>() != kCorpusFormatVersion) {
        throw Error("unsupported format version (expected " +
                    std::to_string(kCorpusFormatVersion) + ")");
    }
    ChatRecord r;
    auto req_string = [&](const char* k) -> std::string {
        if (!j.contains(k)) throw Error(std::string("missing required field '") + k + "'");
        if (!j[k].is_string()) throw Error(std::string("field '") + k + "' must be a string");
        return j[k].get<std::string>();
    };
    r.id = req_string("id");
    r.source = req_string("source");
    auto qt = question_type_from_string(req_string("question_type"));
    if (!qt) throw Error("invalid question_type");
    r.question_type = *qt;
    if (j.contains("gold_label")) {
        if (!j["gold_label"].is_string()) throw Error("field 'gold_label' must be a string");
        r.gold_label = j["gold_label"].get<std::string>();
    }
    if (!j.contains("messages")) throw Error("missing required field 'messages'");
    if (!j["messages"].is_array()) throw Error("field 'messages' must be an array");
    for (const auto& mj : j["messages"]) {
        if (!mj.is_object() || !mj.contains("role") || !mj.contains("content") ||
            !mj["role"].is_string() || !mj["content"].is_string()) {
            throw Error("message entries must be objects with string 'role' and 'content'");
        }
        auto role = role_from_string(mj["role"].get<std::string>());
        if (!role) throw Error("invalid message role: " + mj["role"].get<std::string>());
        r.messages.push_back(Message{*role, trim(mj["content"].get<std::string>())});
    }
    if (!j.contains("provenance")) throw Error("missing required field 'provenance'");
    const Json& prov = j["provenance"];
    if (!prov.is_object() || !prov.contains("kind") || !prov["kind"].is_string()) {
        throw Error("provenance must be an object with string 'kind'");
    }
    const std::string kind = prov["kind"].get<std::string>();
    if (kind == "synthetic") {
        SyntheticInfo s;
        if (!prov.contains("component") || !prov["component"].is_string()) {
            throw Error("synthetic provenance requires 'component'");
        }
        auto comp = synth_component_from_string(prov["component"].get<std::string>());
        if (!comp) throw Error("invalid synthetic component");
        s.component = *comp;
        if (!prov.contains("teacher") || !prov["teacher"].is_string()) {
            throw Error("synthetic provenance requires 'teacher'");
        }
        s.teacher = prov["teacher"].get<std::string>();
        if (!prov.contains("attempts_used") || !prov["attempts_used"].is_number_integer()) {
            throw Error("synthetic provenance requires integer 'attempts_used'");
        }
        s.attempts_used = prov["attempts_used"].get<int>();
        r.synthetic = s;
    } else if (kind != "source") {
        throw Error("invalid provenance kind: " + kind);
    }
    if (j.contains("annotations")) {
        if (!j["annotations"].is_object()) throw Error("field 'annotations' must be an object");
        r.annotations = detail::annotations_from_json(j["annotations"]);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKnownRecordFields) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) r.extra[it.key()] = it.value();
    }
    if (auto bad = violated_invariant(r)) throw Error(*bad);
    return r;
}

// ---------------------------------------------------------------------------

struct GuidelineDoc {
    std::string id;
    std::string institution;
    std::string text;      // non-empty body
    long token_count = 0;  // length of the configured tokenizer's output

    friend bool operator==(const GuidelineDoc&, const GuidelineDoc&) = default;
};

inline Json guideline_to_json(const GuidelineDoc& d) {
    return Json{{"format", kCorpusFormatVersion},
                {"id", d.id},
                {"institution", d.institution},
                {"text", d.text},
                {"token_count", d.token_count}};
}

inline GuidelineDoc guideline_from_json(const Json& j) {
    if (!j.is_object()) throw Error("guideline is not a JSON object");
    if (!j.contains("format") || !j["format"].is_number_integer() ||
        j["format"].get<int>() != kCorpusFormatVersion) {
        throw Error("unsupported format version");
    }
    GuidelineDoc d;
    for (const char* k : {"id", "institution", "text"}) {
        if (!j.contains(k) || !j[k].is_string()) {
            throw Error(std::string("guideline field '") + k + "' must be a string");
        }
    }
    d.id = j["id"].get<std::string>();
    d.institution = j["institution"].get<std::string>();
    d.text = j["text"].get<std::string>();
    if (!j.contains("token_count") || !j["token_count"].is_number_integer()) {
        throw Error("guideline field 'token_count' must be an integer");
    }
    d.token_count = j["token_count"].get<long>();
    if (d.text.empty()) throw Error("guideline text is empty");
    if (d.token_count < 0) throw Error("guideline token_count must be >= 0");
    return d;
}

}  // namespace medforge
