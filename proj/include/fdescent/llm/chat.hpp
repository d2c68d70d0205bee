#pragma once
// Chat-completion request types, the backend interface, and the retrying
// `complete` entry point shared by generators and judges.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fdescent/error.hpp"

namespace fdescent::llm {

enum class Role { system, user, assistant };

inline const char* to_string(Role r) noexcept {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline constexpr double kGenerationTemperature = 0.6;
inline constexpr double kJudgeTemperature = 0.0;

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = kGenerationTemperature;
    int max_attempts = 3;

    void validate() const {
        if (messages.empty()) throw ConfigError("messages", "chat request needs at least one message");
        if (!(temperature >= 0.0)) throw ConfigError("temperature", "must be >= 0");
        if (max_attempts < 1) throw ConfigError("max_attempts", "must be >= 1");
    }

    bool operator==(const ChatRequest&) const = default;
};

// One attempt against a concrete transport. Throw TransientError for failures
// worth retrying (connection loss, 429, 5xx), ProtocolError for a malformed
// body, BackendError for anything final.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string send(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    std::chrono::milliseconds initial_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30000};
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };

    std::chrono::milliseconds delay_before(int retry) const {
        double d = static_cast<double>(initial_delay.count());
        for (int i = 1; i < retry; ++i) d *= multiplier;
        return std::chrono::milliseconds(static_cast<long long>(std::min<double>(d, max_delay.count())));
    }

    static RetryPolicy immediate() {
        RetryPolicy p;
        p.sleep = [](std::chrono::milliseconds) {};
        return p;
    }
};

inline std::string complete(ChatBackend& backend, const ChatRequest& request, const RetryPolicy& policy = {}) {
    request.validate();
    std::string last;
    for (int attempt = 1; attempt <= request.max_attempts; ++attempt) {
        if (attempt > 1 && policy.sleep) policy.sleep(policy.delay_before(attempt - 1));
        try {
            return backend.send(request);
        } catch (const ProtocolError&) {
            throw;
        } catch (const TransientError& e) {
            last = e.what();
        }
    }
    throw BackendError("chat completion failed after " + std::to_string(request.max_attempts) +
                       " attempts: " + last);
}

struct CompletionResult {
    std::optional<std::string> text;
    std::string error;

    bool ok() const noexcept { return text.has_value(); }
};

// Runs `requests` with at most `max_in_flight` concurrent calls. Results are
// indexed like the input regardless of completion order.
inline std::vector<CompletionResult> complete_many(ChatBackend& backend, const std::vector<ChatRequest>& requests,
                                                   std::size_t max_in_flight = 4, const RetryPolicy& policy = {}) {
    std::vector<CompletionResult> out(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                out[i].text = complete(backend, requests[i], policy);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    const std::size_t n = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(1, requests.size()));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace fdescent::llm
