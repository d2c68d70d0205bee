#pragma once
// Head-to-head check that true rationales explain new artifacts better than
// scrambled ones.

#include <optional>
#include <string>
#include <vector>

#include "fdescent/judge/compare.hpp"
#include "fdescent/stats/binomial.hpp"
#include "fdescent/stats/rng.hpp"
#include "fdescent/util/log.hpp"

namespace fdescent::judge {

inline std::string audit_rubric(const std::string& new_artifact) {
    return "An artifact was revised after receiving feedback. Two feedback texts, A and B, are shown. Decide which "
           "feedback is more consistent with the revision below, that is, which one the author most plausibly "
           "acted on.\n\nRevised artifact:\n" +
           new_artifact;
}

// true iff the backend picks the true feedback; nullopt when the item had to
// be skipped (backend failure or unreadable verdict).
inline std::optional<bool> alignment_audit(const std::string& new_artifact, const std::string& true_feedback,
                                           const std::string& scrambled_feedback, JudgeBackend& backend,
                                           stats::RngStream& rng) {
    if (true_feedback == scrambled_feedback) throw InputError("alignment_audit: feedback texts must differ");
    const bool true_first = rng.bernoulli(0.5);
    JudgeRequest req{audit_rubric(new_artifact), true_first ? true_feedback : scrambled_feedback,
                     true_first ? scrambled_feedback : true_feedback};
    try {
        const auto v = parse_verdict(backend.judge(req));
        if (!v.winner) {
            log::warn("alignment_audit: no verdict line; item skipped");
            return std::nullopt;
        }
        return (*v.winner == Slot::A) == true_first;
    } catch (const BackendError& e) {
        log::warn(std::string("alignment_audit: backend failure, item skipped: ") + e.what());
        return std::nullopt;
    }
}

struct AuditSummary {
    std::uint64_t trials = 0;
    std::uint64_t wins = 0;
    std::uint64_t skipped = 0;
    double win_rate = 0.0;
    double p_value = 1.0;  // one-sided binomial test against 1/2
};

inline AuditSummary summarize_audits(const std::vector<std::optional<bool>>& items) {
    AuditSummary s;
    for (const auto& it : items) {
        if (!it) {
            ++s.skipped;
            continue;
        }
        ++s.trials;
        s.wins += *it ? 1 : 0;
    }
    if (s.trials > 0) {
        s.win_rate = static_cast<double>(s.wins) / static_cast<double>(s.trials);
        s.p_value = stats::binomial_tail(s.trials, s.wins, 0.5);
    }
    return s;
}

}  // namespace fdescent::judge
