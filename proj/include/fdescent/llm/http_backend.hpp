#pragma once
// OpenAI-style /chat/completions client.

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "fdescent/llm/chat.hpp"

namespace fdescent::llm {

struct Endpoint {
    std::string base_url;  // e.g. "http://127.0.0.1:8000/v1"
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{120};

    // FDESCENT_API_BASE, FDESCENT_API_KEY, FDESCENT_MODEL.
    static Endpoint from_env() {
        auto get = [](const char* k) -> std::string {
            const char* v = std::getenv(k);
            return v ? v : "";
        };
        Endpoint e{get("FDESCENT_API_BASE"), get("FDESCENT_API_KEY"), get("FDESCENT_MODEL")};
        if (e.base_url.empty()) throw ConfigError("FDESCENT_API_BASE", "endpoint base URL is not set");
        return e;
    }
};

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(Endpoint ep) : ep_(std::move(ep)) {
        const auto scheme = ep_.base_url.find("://");
        if (scheme == std::string::npos) throw ConfigError("base_url", "expected scheme://host[:port][/path]");
        const auto slash = ep_.base_url.find('/', scheme + 3);
        host_ = ep_.base_url.substr(0, slash);
        prefix_ = slash == std::string::npos ? "" : ep_.base_url.substr(slash);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    const Endpoint& endpoint() const noexcept { return ep_; }

    static nlohmann::json request_body(const ChatRequest& r, const std::string& default_model) {
        nlohmann::json msgs = nlohmann::json::array();
        for (const auto& m : r.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
        return {{"model", r.model.empty() ? default_model : r.model},
                {"messages", std::move(msgs)},
                {"temperature", r.temperature}};
    }

    static std::string parse_response(const std::string& body) {
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) throw ProtocolError("response is not JSON");
        try {
            const auto& content = j.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw ProtocolError("message content is not a string");
            return content.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("unexpected response shape: ") + e.what());
        }
    }

    std::string send(const ChatRequest& request) override {
        httplib::Client cli(host_);
        cli.set_connection_timeout(ep_.timeout);
        cli.set_read_timeout(ep_.timeout);
        cli.set_write_timeout(ep_.timeout);
        httplib::Headers headers;
        if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);
        const auto res =
            cli.Post(prefix_ + "/chat/completions", headers, request_body(request, ep_.model).dump(), "application/json");
        if (!res) throw TransientError("transport error: " + httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500) {
            throw TransientError("HTTP " + std::to_string(res->status));
        }
        if (res->status != 200) throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body);
        return parse_response(res->body);
    }

private:
    Endpoint ep_;
    std::string host_;
    std::string prefix_;
};

}  // namespace fdescent::llm
