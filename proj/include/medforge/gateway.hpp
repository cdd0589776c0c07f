#pragma once

// Chat-completion gateway. All model calls go through Gateway::complete().
// Two backends: an HTTP client speaking the common chat-completions JSON
// shape, and a scripted mock whose replies are a pure function of
// (messages, temperature, seed_tag, call-ordinal).

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "medforge/rng.hpp"
#include "medforge/util.hpp"

namespace medforge {

enum class ReqRole { system, developer, user, assistant };

inline const char* to_string(ReqRole r) {
    switch (r) {
        case ReqRole::system: return "system";
        case ReqRole::developer: return "developer";
        case ReqRole::user: return "user";
        case ReqRole::assistant: return "assistant";
    }
    return "?";
}

struct ReqMessage {
    ReqRole role = ReqRole::user;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ReqMessage> messages;
    double temperature = 0.0;  // must be in [0, 2]
    int max_tokens = 0;        // 0 = backend default
    std::string seed_tag;      // distinguishes otherwise-identical mock calls
};

enum class FinishReason { stop, length, error };
enum class ErrorKind { none, transport, api };

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    int latency_ms = 0;
    ErrorKind error_kind = ErrorKind::none;
    std::string error;
    int attempts = 1;  // transport retries consumed by this call

    bool ok() const { return finish_reason != FinishReason::error; }
};

struct RetryPolicy {
    int max_attempts = 5;
    int base_delay_ms = 500;
    double factor = 2.0;
    bool jitter = true;
};

// Blocking token bucket; rps <= 0 disables limiting.
class TokenBucket {
public:
    explicit TokenBucket(double rps = 0.0, double burst = 1.0)
        : rps_(rps), capacity_(std::max(burst, 1.0)), tokens_(capacity_),
          last_(Clock::now()) {}

    void acquire() {
        if (rps_ <= 0) return;
        std::unique_lock lock(mu_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const double need = 1.0 - tokens_;
            auto wait = std::chrono::duration<double>(need / rps_);
            cv_.wait_for(lock, wait);
        }
    }

private:
    using Clock = std::chrono::steady_clock;

    void refill() {
        auto now = Clock::now();
        double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed * rps_);
    }

    double rps_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mu_;
    std::condition_variable cv_;
};

class Gateway {
public:
    virtual ~Gateway() = default;

    // One logical completion. Transient transport failures are retried with
    // exponential backoff up to the policy cap; API and parse-level failures
    // are returned to the caller unretried.
    ChatResponse complete(const ChatRequest& req) {
        if (req.messages.empty()) {
            return error_response(ErrorKind::api, "request has no messages");
        }
        if (req.temperature < 0.0 || req.temperature > 2.0) {
            return error_response(ErrorKind::api, "temperature must be in [0, 2]");
        }
        ChatResponse resp;
        for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
            bucket_.acquire();
            resp = attempt_once(req);
            resp.attempts = attempt;
            if (resp.error_kind != ErrorKind::transport || attempt == retry_.max_attempts) {
                return resp;
            }
            sleep_backoff(attempt);
        }
        return resp;
    }

protected:
    Gateway(RetryPolicy retry, double rps)
        : retry_(retry), bucket_(rps), backoff_rng_(0x9e3779b9u) {}

    virtual ChatResponse attempt_once(const ChatRequest& req) = 0;

    static ChatResponse error_response(ErrorKind kind, std::string message) {
        ChatResponse r;
        r.finish_reason = FinishReason::error;
        r.error_kind = kind;
        r.error = std::move(message);
        return r;
    }

private:
    void sleep_backoff(int attempt) {
        if (retry_.base_delay_ms <= 0) return;
        double delay = retry_.base_delay_ms;
        for (int i = 1; i < attempt; ++i) delay *= retry_.factor;
        if (retry_.jitter) {
            std::lock_guard lock(rng_mu_);
            delay *= 0.5 + backoff_rng_.uniform01();
        }
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }

    RetryPolicy retry_;
    TokenBucket bucket_;
    Rng backoff_rng_;
    std::mutex rng_mu_;
};

struct IndexedResponse {
    size_t index = 0;
    ChatResponse response;
};

// Runs the batch with at most max_in_flight requests outstanding. Results
// carry original indices and appear in completion order; per-request errors
// are yielded in-stream and never abort the batch.
inline std::vector<IndexedResponse> complete_many(Gateway& gw,
                                                  const std::vector<ChatRequest>& reqs,
                                                  int max_in_flight) {
    if (max_in_flight < 1) throw Error("complete_many requires max_in_flight >= 1");
    std::vector<IndexedResponse> out;
    out.reserve(reqs.size());
    std::mutex out_mu;
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= reqs.size()) return;
            ChatResponse resp = gw.complete(reqs[i]);
            std::lock_guard lock(out_mu);
            out.push_back(IndexedResponse{i, std::move(resp)});
        }
    };
    size_t workers = std::min<size_t>(static_cast<size_t>(max_in_flight), reqs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mock backend

// Canonical key for one request; mock scripts address replies by this.
inline std::string mock_request_key(const ChatRequest& req) {
    std::string canon;
    for (const auto& m : req.messages) {
        canon += to_string(m.role);
        canon += '\x1f';
        canon += m.content;
        canon += '\x1e';
    }
    char temp[32];
    std::snprintf(temp, sizeof temp, "t=%.6g", req.temperature);
    canon += temp;
    canon += '\x1e';
    canon += "tag=";
    canon += req.seed_tag;
    return sha256_hex(canon);
}

struct MockReply {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    int latency_ms = 0;
    bool transport_error = false;  // scripted transient failure
};

// Scripted deterministic backend. Resolution order per request:
//   1. exact entry keyed by mock_request_key(req)
//   2. first rule whose regex matches the flattened message text
//      (reply templates may use $1.. to splice captures)
//   3. the default reply
// Anything else is an API error. Entries may be single replies or sequences;
// a sequence is consumed per call ordinal of its key/rule and its last
// element repeats once exhausted.
class MockGateway : public Gateway {
public:
    explicit MockGateway(RetryPolicy retry = {5, 0, 2.0, false}, double rps = 0.0)
        : Gateway(retry, rps) {}

    void script(const std::string& key, std::vector<MockReply> replies) {
        std::lock_guard lock(mu_);
        exact_[key] = std::move(replies);
    }
    void script(const ChatRequest& req, std::vector<MockReply> replies) {
        script(mock_request_key(req), std::move(replies));
    }
    void script_rule(const std::string& pattern, std::vector<MockReply> replies) {
        std::lock_guard lock(mu_);
        rules_.push_back(Rule{std::regex(pattern), pattern, std::move(replies)});
    }
    void script_default(MockReply reply) {
        std::lock_guard lock(mu_);
        default_ = std::move(reply);
    }

    static std::unique_ptr<MockGateway> from_script_json(const Json& spec,
                                                         RetryPolicy retry = {5, 0, 2.0, false});
    static std::unique_ptr<MockGateway> from_script_file(const std::string& path,
                                                         RetryPolicy retry = {5, 0, 2.0, false});

    long total_calls() const { return total_calls_.load(); }
    int max_concurrent() const { return max_concurrent_.load(); }

protected:
    ChatResponse attempt_once(const ChatRequest& req) override {
        ++total_calls_;
        int cur = ++concurrent_;
        int seen = max_concurrent_.load();
        while (cur > seen && !max_concurrent_.compare_exchange_weak(seen, cur)) {
        }
        MockReply reply;
        bool found = false;
        std::string formatted_text;
        {
            std::lock_guard lock(mu_);
            const std::string key = mock_request_key(req);
            if (auto it = exact_.find(key); it != exact_.end()) {
                reply = pick(it->second, exact_ordinals_[key]++);
                formatted_text = reply.text;
                found = true;
            } else {
                std::string flat = flatten(req);
                for (size_t i = 0; i < rules_.size() && !found; ++i) {
                    std::smatch m;
                    if (std::regex_search(flat, m, rules_[i].pattern)) {
                        reply = pick(rules_[i].replies, rule_ordinals_[i]++);
                        formatted_text = m.format(reply.text);
                        found = true;
                    }
                }
                if (!found && default_) {
                    reply = *default_;
                    formatted_text = reply.text;
                    found = true;
                }
            }
        }
        if (reply.latency_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(reply.latency_ms));
        }
        --concurrent_;
        if (!found) {
            return error_response(ErrorKind::api, "mock: no scripted reply for request");
        }
        if (reply.transport_error) {
            return error_response(ErrorKind::transport, "mock: scripted transport failure");
        }
        ChatResponse resp;
        resp.text = std::move(formatted_text);
        resp.finish_reason = reply.finish_reason;
        resp.latency_ms = reply.latency_ms;
        return resp;
    }

private:
    struct Rule {
        std::regex pattern;
        std::string pattern_text;
        std::vector<MockReply> replies;
    };

    static const MockReply& pick(const std::vector<MockReply>& seq, long ordinal) {
        if (seq.empty()) throw Error("mock: empty reply sequence");
        size_t i = std::min<size_t>(static_cast<size_t>(ordinal), seq.size() - 1);
        return seq[i];
    }

    static std::string flatten(const ChatRequest& req) {
        std::string flat;
        for (const auto& m : req.messages) {
            flat += to_string(m.role);
            flat += ": ";
            flat += m.content;
            flat += '\n';
        }
        return flat;
    }

    mutable std::mutex mu_;
    std::map<std::string, std::vector<MockReply>> exact_;
    std::map<std::string, long> exact_ordinals_;
    std::vector<Rule> rules_;
    std::map<size_t, long> rule_ordinals_;
    std::optional<MockReply> default_;
    std::atomic<long> total_calls_{0};
    std::atomic<int> concurrent_{0};
    std::atomic<int> max_concurrent_{0};
};

namespace detail {

inline MockReply mock_reply_from_json(const Json& j) {
    MockReply r;
    if (j.is_string()) {
        r.text = j.get<std::string>();
        return r;
    }
    if (!j.is_object()) throw Error("mock script reply must be a string or object");
    if (j.contains("text")) r.text = j["text"].get<std::string>();
    if (j.contains("finish_reason")) {
        const std::string fr = j["finish_reason"].get<std::string>();
        if (fr == "stop") r.finish_reason = FinishReason::stop;
        else if (fr == "length") r.finish_reason = FinishReason::length;
        else throw Error("mock script finish_reason must be stop|length");
    }
    if (j.contains("latency_ms")) r.latency_ms = j["latency_ms"].get<int>();
    if (j.contains("transport_error")) r.transport_error = j["transport_error"].get<bool>();
    return r;
}

inline std::vector<MockReply> mock_replies_from_json(const Json& j) {
    std::vector<MockReply> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(mock_reply_from_json(e));
        if (out.empty()) throw Error("mock script reply sequence is empty");
    } else {
        out.push_back(mock_reply_from_json(j));
    }
    return out;
}

}  // namespace detail

inline std::unique_ptr<MockGateway> MockGateway::from_script_json(const Json& spec,
                                                                  RetryPolicy retry) {
    auto gw = std::make_unique<MockGateway>(retry);
    if (!spec.is_object()) throw Error("mock script must be a JSON object");
    if (spec.contains("exact")) {
        for (auto it = spec["exact"].begin(); it != spec["exact"].end(); ++it) {
            gw->script(it.key(), detail::mock_replies_from_json(it.value()));
        }
    }
    if (spec.contains("rules")) {
        for (const auto& rule : spec["rules"]) {
            if (!rule.is_object() || !rule.contains("pattern")) {
                throw Error("mock script rule requires 'pattern'");
            }
            Json replies;
            if (rule.contains("replies")) replies = rule["replies"];
            else if (rule.contains("reply")) replies = rule["reply"];
            else throw Error("mock script rule requires 'reply' or 'replies'");
            gw->script_rule(rule["pattern"].get<std::string>(),
                            detail::mock_replies_from_json(replies));
        }
    }
    if (spec.contains("default")) {
        auto seq = detail::mock_replies_from_json(spec["default"]);
        gw->script_default(seq.front());
    }
    return gw;
}

inline std::unique_ptr<MockGateway> MockGateway::from_script_file(const std::string& path,
                                                                  RetryPolicy retry) {
    Json spec;
    try {
        spec = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw Error("mock script " + path + " is not valid JSON: " + e.what());
    }
    return from_script_json(spec, retry);
}

}  // namespace medforge
