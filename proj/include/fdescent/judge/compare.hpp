#pragma once
// Pairwise judging with the order-swapped consistency protocol.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdescent/core/types.hpp"
#include "fdescent/llm/chat.hpp"
#include "fdescent/util/text.hpp"

namespace fdescent::judge {

struct JudgeRequest {
    std::string rubric;
    std::string a;  // shown first
    std::string b;
};

// Returns free text that contains a `WINNER: A|B` line.
class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string judge(const JudgeRequest& request) = 0;
};

enum class Slot { A, B };

struct Verdict {
    std::optional<Slot> winner;
    std::string rationale;  // response with the verdict line removed
};

namespace detail {
inline std::optional<Slot> verdict_line(std::string_view line) {
    auto s = util::trim(line);
    while (!s.empty() && (s.front() == '*' || s.front() == '#')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '*' || s.back() == '.')) s.remove_suffix(1);
    s = util::trim(s);
    const auto colon = s.find(':');
    if (colon == std::string_view::npos || !util::iequals(util::trim(s.substr(0, colon)), "winner")) return std::nullopt;
    const auto v = util::trim(s.substr(colon + 1));
    if (util::iequals(v, "a")) return Slot::A;
    if (util::iequals(v, "b")) return Slot::B;
    return std::nullopt;
}
}  // namespace detail

// The last verdict line wins, so a model that restates the format earlier in
// its answer is still read correctly.
inline Verdict parse_verdict(std::string_view text) {
    Verdict v;
    std::string rest;
    std::size_t verdict_index = std::string::npos;
    const auto ls = util::lines(text);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        if (auto w = detail::verdict_line(ls[i])) {
            v.winner = w;
            verdict_index = i;
        }
    }
    for (std::size_t i = 0; i < ls.size(); ++i) {
        if (i == verdict_index) continue;
        rest += ls[i];
        rest += '\n';
    }
    v.rationale = std::string(util::trim(rest));
    return v;
}

enum class Winner { candidate, incumbent, inconclusive };

inline const char* to_string(Winner w) noexcept {
    switch (w) {
        case Winner::candidate: return "candidate";
        case Winner::incumbent: return "incumbent";
        case Winner::inconclusive: return "inconclusive";
    }
    return "?";
}

enum class Order { candidate_first, incumbent_first };

struct Transcript {
    int attempt = 0;
    Order order = Order::candidate_first;
    std::string raw;  // backend text, or the error message when failed
    bool failed = false;
    std::optional<Slot> verdict;
};

struct ComparisonOutcome {
    Winner winner = Winner::inconclusive;
    std::string rationale;
    int attempts = 0;
    std::uint64_t oracle_calls = 0;
    std::vector<Transcript> transcripts;
};

inline constexpr int kMaxJudgeAttempts = 3;

// Each attempt asks for both presentation orders. A winner is declared only
// when the two verdicts name the same artifact; otherwise the attempt is
// repeated, up to `max_attempts`. Backend failures void the attempt.
inline ComparisonOutcome compare(const Artifact& candidate, const Artifact& incumbent, JudgeBackend& backend,
                                 const std::string& rubric, int max_attempts = kMaxJudgeAttempts) {
    if (max_attempts < 1) throw ConfigError("max_attempts", "must be >= 1");
    candidate.validate();
    incumbent.validate();
    ComparisonOutcome out;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        out.attempts = attempt;
        Transcript ab{attempt, Order::candidate_first, {}, false, {}};
        Transcript ba{attempt, Order::incumbent_first, {}, false, {}};
        std::string ab_rationale;
        for (Transcript* t : {&ab, &ba}) {
            const bool cand_first = t->order == Order::candidate_first;
            ++out.oracle_calls;
            try {
                t->raw = backend.judge({rubric, cand_first ? candidate.payload : incumbent.payload,
                                        cand_first ? incumbent.payload : candidate.payload});
                const auto v = parse_verdict(t->raw);
                t->verdict = v.winner;
                if (cand_first) ab_rationale = v.rationale;
            } catch (const BackendError& e) {
                t->raw = e.what();
                t->failed = true;
            }
        }
        out.transcripts.push_back(ab);
        out.transcripts.push_back(ba);
        if (ab.failed || ba.failed || !ab.verdict || !ba.verdict) continue;
        if (*ab.verdict == Slot::A && *ba.verdict == Slot::B) {
            out.winner = Winner::candidate;
        } else if (*ab.verdict == Slot::B && *ba.verdict == Slot::A) {
            out.winner = Winner::incumbent;
        } else {
            continue;
        }
        out.rationale = ab_rationale;
        return out;
    }
    out.winner = Winner::inconclusive;
    return out;
}

inline const std::string& default_judge_instructions() {
    static const std::string s =
        "You compare two artifacts, A and B, against the rubric above. Explain which one is better and why, "
        "and say concretely how the weaker one could be improved. End your answer with a single line of the "
        "form `WINNER: A` or `WINNER: B`.";
    return s;
}

// Judge backed by a chat model at temperature 0.
class ChatJudge : public JudgeBackend {
public:
    ChatJudge(llm::ChatBackend& chat, std::string model = {}, llm::RetryPolicy retry = {})
        : chat_(chat), model_(std::move(model)), retry_(std::move(retry)) {}

    static llm::ChatRequest build_request(const JudgeRequest& r, const std::string& model) {
        llm::ChatRequest req;
        req.model = model;
        req.temperature = llm::kJudgeTemperature;
        req.messages = {{llm::Role::system, r.rubric + "\n\n" + default_judge_instructions()},
                        {llm::Role::user, "Artifact A:\n" + r.a + "\n\nArtifact B:\n" + r.b}};
        return req;
    }

    std::string judge(const JudgeRequest& r) override { return llm::complete(chat_, build_request(r, model_), retry_); }

private:
    llm::ChatBackend& chat_;
    std::string model_;
    llm::RetryPolicy retry_;
};

}  // namespace fdescent::judge
