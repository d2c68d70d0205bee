#pragma once
// Generic text generator: prompts a chat model with the task, the incumbent
// and the accumulated rationales.

#include <string>
#include <vector>

#include "fdescent/core/interfaces.hpp"
#include "fdescent/llm/chat.hpp"
#include "fdescent/llm/template.hpp"

namespace fdescent {

class ChatGenerator : public Generator {
public:
    struct Options {
        std::string model;
        double temperature = llm::kGenerationTemperature;
        // When set, the artifact is the content of <tag>...</tag>; otherwise
        // the whole trimmed response.
        std::string tag;
        llm::RetryPolicy retry;
    };

    ChatGenerator(llm::ChatBackend& chat, std::string task, Options opt)
        : chat_(chat), task_(std::move(task)), opt_(std::move(opt)) {}
    ChatGenerator(llm::ChatBackend& chat, std::string task) : ChatGenerator(chat, std::move(task), Options{}) {}

    Artifact initialize(const std::string& task, stats::RngStream&) override {
        const auto text = call({{llm::Role::user, task}});
        return {"c0", Domain::synthetic, extract(text), {}};
    }

    Proposal propose(const Artifact& incumbent, const std::vector<FeedbackRecord>& history,
                     stats::RngStream&) override {
        const auto text = call({{llm::Role::system, task_}, {llm::Role::user, build_context(incumbent, history)}});
        try {
            auto payload = extract(text);
            if (payload.empty()) return {Artifact{"", incumbent.domain, text, {}}, std::string("empty output")};
            return {Artifact{"", incumbent.domain, std::move(payload), {}}, std::nullopt};
        } catch (const ParseError& e) {
            return {Artifact{"", incumbent.domain, text, {}}, std::string(e.what())};
        }
    }

    std::string build_context(const Artifact& incumbent, const std::vector<FeedbackRecord>& history) const {
        std::string s = "Current best artifact:\n" + incumbent.payload + "\n\n";
        if (history.empty()) {
            s += "No feedback from previous comparisons yet.\n";
        } else {
            s += "Feedback from previous comparisons against the current best (oldest first):\n";
            for (const auto& r : history) {
                s += "- [" + std::string(r.preference ? "preferred" : "rejected") + "] " + r.rationale + "\n";
            }
        }
        s += "\nPropose an improved artifact.";
        if (!opt_.tag.empty()) s += " Wrap it in <" + opt_.tag + "></" + opt_.tag + ">.";
        return s;
    }

private:
    std::string call(std::vector<llm::ChatMessage> msgs) {
        llm::ChatRequest req;
        req.model = opt_.model;
        req.temperature = opt_.temperature;
        req.messages = std::move(msgs);
        return llm::complete(chat_, req, opt_.retry);
    }

    std::string extract(const std::string& text) const {
        if (opt_.tag.empty()) return std::string(util::trim(text));
        return llm::parse_tagged(text, opt_.tag);
    }

    llm::ChatBackend& chat_;
    std::string task_;
    Options opt_;
};

}  // namespace fdescent
