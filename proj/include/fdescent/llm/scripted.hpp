#pragma once
// Deterministic in-process backend for tests and offline runs.

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "fdescent/llm/chat.hpp"

namespace fdescent::llm {

class ScriptedBackend : public ChatBackend {
public:
    enum class Kind { reply, transient, protocol, fatal };

    struct Step {
        Kind kind = Kind::reply;
        std::string text;
    };

    using Responder = std::function<std::string(const ChatRequest&)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> replies) {
        for (auto& r : replies) push(std::move(r));
    }
    // Answers every request by calling `fn` once the queued steps run out.
    explicit ScriptedBackend(Responder fn) : responder_(std::move(fn)) {}

    ScriptedBackend& push(std::string reply) { return push_step({Kind::reply, std::move(reply)}); }
    ScriptedBackend& fail(Kind kind, std::string message = "scripted failure") {
        return push_step({kind, std::move(message)});
    }
    ScriptedBackend& push_step(Step s) {
        std::lock_guard lock(mu_);
        queue_.push_back(std::move(s));
        return *this;
    }

    std::string send(const ChatRequest& request) override {
        Step step;
        Responder fn;
        {
            std::lock_guard lock(mu_);
            log_.push_back(request);
            if (queue_.empty()) {
                if (!responder_) throw BackendError("scripted backend: no responses left");
                fn = responder_;
            } else {
                step = std::move(queue_.front());
                queue_.pop_front();
            }
        }
        if (fn) return fn(request);
        switch (step.kind) {
            case Kind::reply: return step.text;
            case Kind::transient: throw TransientError(step.text);
            case Kind::protocol: throw ProtocolError(step.text);
            case Kind::fatal: throw BackendError(step.text);
        }
        return step.text;
    }

    std::vector<ChatRequest> calls() const {
        std::lock_guard lock(mu_);
        return log_;
    }
    std::size_t call_count() const {
        std::lock_guard lock(mu_);
        return log_.size();
    }
    std::size_t remaining() const {
        std::lock_guard lock(mu_);
        return queue_.size();
    }

private:
    mutable std::mutex mu_;
    std::deque<Step> queue_;
    std::vector<ChatRequest> log_;
    Responder responder_;
};

}  // namespace fdescent::llm
