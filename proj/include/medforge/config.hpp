#pragma once

// Hierarchical run configuration: one JSON document per run. Environment
// variables override only credentials (api_key_env names the variable).
// Every seed is explicit; nothing falls back to wall-clock state.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medforge/gateway.hpp"
#include "medforge/http_gateway.hpp"
#include "medforge/ingest.hpp"
#include "medforge/profiler.hpp"
#include "medforge/synthgen.hpp"
#include "medforge/util.hpp"

namespace medforge {

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct RunConfig {
    Json raw = Json::object();
    std::string path;       // config file location, for hashing
    std::string base_dir;   // relative paths resolve against this

    std::string resolve_path(const std::string& p) const {
        namespace fs = std::filesystem;
        fs::path path_obj(p);
        if (path_obj.is_absolute() || base_dir.empty()) return p;
        return (fs::path(base_dir) / path_obj).string();
    }

    bool has(const std::string& dotted) const { return find(dotted) != nullptr; }

    const Json* find(const std::string& dotted) const {
        const Json* cur = &raw;
        size_t start = 0;
        while (start <= dotted.size()) {
            size_t dot = dotted.find('.', start);
            std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
            if (!cur->is_object() || !cur->contains(key)) return nullptr;
            cur = &(*cur)[key];
            if (dot == std::string::npos) return cur;
            start = dot + 1;
        }
        return nullptr;
    }

    template <class T>
    T get_or(const std::string& dotted, T fallback) const {
        const Json* v = find(dotted);
        if (!v) return fallback;
        try {
            return v->get<T>();
        } catch (const Json::exception&) {
            throw ConfigError(dotted, "has the wrong type");
        }
    }

    template <class T>
    T require(const std::string& dotted) const {
        const Json* v = find(dotted);
        if (!v) throw ConfigError(dotted, "is required");
        try {
            return v->get<T>();
        } catch (const Json::exception&) {
            throw ConfigError(dotted, "has the wrong type");
        }
    }

    uint64_t require_seed(const std::string& name) const {
        const Json* v = find("seeds." + name);
        if (!v || !v->is_number_integer()) {
            throw ConfigError("seeds." + name, "must be an explicit integer seed");
        }
        return static_cast<uint64_t>(v->get<long long>());
    }
};

namespace detail {

inline void check_range(const RunConfig& cfg, const std::string& field, double lo, double hi) {
    const Json* v = cfg.find(field);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(field, "must be a number");
    const double x = v->get<double>();
    if (x < lo || x > hi) {
        throw ConfigError(field, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

inline void check_file_exists(const RunConfig& cfg, const std::string& field,
                              const std::string& path) {
    if (!std::filesystem::exists(cfg.resolve_path(path))) {
        throw ConfigError(field, "references missing file: " + path);
    }
}

inline void validate_endpoint(const RunConfig& cfg, const std::string& key, const Json& ep) {
    const std::string field = "endpoints." + key;
    if (!ep.is_object()) throw ConfigError(field, "must be an object");
    const std::string backend = ep.value("backend", std::string());
    if (backend != "mock" && backend != "http") {
        throw ConfigError(field + ".backend", "must be 'mock' or 'http'");
    }
    if (backend == "mock") {
        if (!ep.contains("script") || !ep["script"].is_string()) {
            throw ConfigError(field + ".script", "is required for mock endpoints");
        }
        check_file_exists(cfg, field + ".script", ep["script"].get<std::string>());
    } else {
        if (!ep.contains("base_url") || !ep["base_url"].is_string()) {
            throw ConfigError(field + ".base_url", "is required for http endpoints");
        }
    }
    if (!ep.contains("model") || !ep["model"].is_string()) {
        throw ConfigError(field + ".model", "is required");
    }
}

}  // namespace detail

// Schema validation; throws ConfigError naming the offending field path.
inline void validate_config(const RunConfig& cfg) {
    if (!cfg.raw.is_object()) throw ConfigError("(root)", "config must be a JSON object");
    detail::check_range(cfg, "decontam.tau", 0.0, 1.0);
    if (const Json* v = cfg.find("decontam.n")) {
        if (!v->is_number_integer() || v->get<int>() < 2) {
            throw ConfigError("decontam.n", "must be an integer >= 2");
        }
    }
    detail::check_range(cfg, "synth.temperature", 0.0, 2.0);
    detail::check_range(cfg, "arena.temperature", 0.0, 2.0);
    detail::check_range(cfg, "profiler.temperature", 0.0, 2.0);
    detail::check_range(cfg, "synth.monitor_threshold", 0.0, 1e9);
    if (const Json* v = cfg.find("synth.max_attempts")) {
        if (!v->is_number_integer() || v->get<int>() < 1) {
            throw ConfigError("synth.max_attempts", "must be an integer >= 1");
        }
    }
    for (const char* field : {"synth.max_in_flight", "profiler.max_in_flight", "arena.max_in_flight"}) {
        if (const Json* v = cfg.find(field)) {
            if (!v->is_number_integer() || v->get<int>() < 1) {
                throw ConfigError(field, "must be an integer >= 1");
            }
        }
    }
    if (const Json* seeds = cfg.find("seeds")) {
        if (!seeds->is_object()) throw ConfigError("seeds", "must be an object");
        for (auto it = seeds->begin(); it != seeds->end(); ++it) {
            if (!it.value().is_number_integer()) {
                throw ConfigError("seeds." + it.key(), "must be an explicit integer seed");
            }
        }
    }
    if (const Json* eps = cfg.find("endpoints")) {
        if (!eps->is_object()) throw ConfigError("endpoints", "must be an object");
        for (auto it = eps->begin(); it != eps->end(); ++it) {
            detail::validate_endpoint(cfg, it.key(), it.value());
        }
    }
    if (const Json* datasets = cfg.find("datasets")) {
        if (!datasets->is_object()) throw ConfigError("datasets", "must be an object");
        for (auto it = datasets->begin(); it != datasets->end(); ++it) {
            const std::string field = "datasets." + it.key();
            const Json& d = it.value();
            if (!d.is_object()) throw ConfigError(field, "must be an object");
            if (!d.contains("schema") || !d["schema"].is_string() ||
                !source_schema_from_string(d["schema"].get<std::string>())) {
                throw ConfigError(field + ".schema",
                                  "must be one of mcq_options_label|context_question_answer|"
                                  "consumer_qa|guideline_corpus");
            }
            if (!d.contains("input_path") || !d["input_path"].is_string()) {
                throw ConfigError(field + ".input_path", "is required");
            }
            detail::check_file_exists(cfg, field + ".input_path", d["input_path"].get<std::string>());
        }
    }
    if (const Json* vocab = cfg.find("profiler.vocab")) {
        if (!vocab->is_object()) throw ConfigError("profiler.vocab", "must be an object");
        for (auto it = vocab->begin(); it != vocab->end(); ++it) {
            if (!it.value().is_array() || it.value().empty()) {
                throw ConfigError("profiler.vocab." + it.key(), "must be a non-empty array");
            }
        }
    }
}

inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    cfg.path = path;
    cfg.base_dir = std::filesystem::path(path).parent_path().string();
    try {
        cfg.raw = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("(root)", std::string("config is not valid JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

// Builds the gateway for one named endpoint entry.
inline std::unique_ptr<Gateway> make_gateway(const RunConfig& cfg, const std::string& key) {
    const Json* ep = cfg.find("endpoints." + key);
    if (!ep) throw ConfigError("endpoints." + key, "is required for this stage");
    detail::validate_endpoint(cfg, key, *ep);
    const std::string backend = ep->value("backend", std::string());
    if (backend == "mock") {
        return MockGateway::from_script_file(cfg.resolve_path((*ep)["script"].get<std::string>()));
    }
    HttpEndpoint http;
    http.base_url = (*ep)["base_url"].get<std::string>();
    http.path = ep->value("path", http.path);
    http.supports_developer_role = ep->value("supports_developer_role", false);
    http.timeout_s = ep->value("timeout_s", http.timeout_s);
    http.rps = ep->value("rps", 0.0);
    if (ep->contains("api_key_env")) {
        const char* v = std::getenv((*ep)["api_key_env"].get<std::string>().c_str());
        if (v) http.api_key = v;
    }
    return std::make_unique<HttpGateway>(http);
}

inline std::string endpoint_model(const RunConfig& cfg, const std::string& key) {
    return cfg.require<std::string>("endpoints." + key + ".model");
}

}  // namespace medforge
