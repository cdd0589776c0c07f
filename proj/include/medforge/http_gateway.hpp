#pragma once

// HTTP backend for the common chat-completions wire shape:
// POST {path} with {"model", "messages": [{"role","content"}...],
// "temperature", "max_tokens"} and the reply text at
// choices[0].message.content.

#include <chrono>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "medforge/gateway.hpp"

namespace medforge {

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string api_key;   // sent as Authorization: Bearer when non-empty
    bool supports_developer_role = false;
    int timeout_s = 120;
    RetryPolicy retry;
    double rps = 0.0;
};

class HttpGateway final : public Gateway {
public:
    explicit HttpGateway(HttpEndpoint ep)
        : Gateway(ep.retry, ep.rps), ep_(std::move(ep)) {}

protected:
    ChatResponse attempt_once(const ChatRequest& req) override {
        httplib::Client client(ep_.base_url);
        client.set_connection_timeout(ep_.timeout_s);
        client.set_read_timeout(ep_.timeout_s);
        httplib::Headers headers;
        if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);

        Json body;
        body["model"] = req.model;
        Json msgs = Json::array();
        for (const auto& m : req.messages) {
            std::string role = to_string(m.role);
            // Backends without a developer role get it as a second
            // system-position message, preserving the text verbatim.
            if (m.role == ReqRole::developer && !ep_.supports_developer_role) role = "system";
            msgs.push_back(Json{{"role", role}, {"content", m.content}});
        }
        body["messages"] = std::move(msgs);
        body["temperature"] = req.temperature;
        if (req.max_tokens > 0) body["max_tokens"] = req.max_tokens;

        auto start = std::chrono::steady_clock::now();
        httplib::Result res = client.Post(ep_.path, headers, body.dump(), "application/json");
        auto elapsed = std::chrono::steady_clock::now() - start;
        int latency_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());

        if (!res) {
            return error_response(ErrorKind::transport,
                                  "transport failure: " + httplib::to_string(res.error()));
        }
        if (res->status == 408 || res->status == 429 || res->status >= 500) {
            return error_response(ErrorKind::transport,
                                  "retryable status " + std::to_string(res->status));
        }
        if (res->status < 200 || res->status >= 300) {
            std::string excerpt = res->body.substr(0, 200);
            return error_response(ErrorKind::api, "status " + std::to_string(res->status) +
                                                      ": " + excerpt);
        }
        Json parsed;
        try {
            parsed = Json::parse(res->body);
        } catch (const Json::parse_error&) {
            return error_response(ErrorKind::api, "response body is not valid JSON");
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty()) {
            return error_response(ErrorKind::api, "response has no choices");
        }
        const Json& choice = parsed["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string()) {
            return error_response(ErrorKind::api, "response has no message content");
        }
        ChatResponse out;
        out.text = choice["message"]["content"].get<std::string>();
        out.latency_ms = latency_ms;
        out.finish_reason = FinishReason::stop;
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string() &&
            choice["finish_reason"].get<std::string>() == "length") {
            out.finish_reason = FinishReason::length;
        }
        return out;
    }

private:
    HttpEndpoint ep_;
};

}  // namespace medforge
