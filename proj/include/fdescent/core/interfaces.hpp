#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdescent/core/types.hpp"
#include "fdescent/judge/compare.hpp"
#include "fdescent/stats/rng.hpp"

namespace fdescent {

struct Proposal {
    Artifact candidate;
    // Set when the generator's output could not be parsed; the candidate is
    // then rejected without consulting the evaluator.
    std::optional<std::string> format_error;
};

// Mutation operator M(x*, R). Throw BackendError when no proposal can be made.
class Generator {
public:
    virtual ~Generator() = default;
    virtual Artifact initialize(const std::string& task, stats::RngStream& rng) = 0;
    virtual Proposal propose(const Artifact& incumbent, const std::vector<FeedbackRecord>& history,
                             stats::RngStream& rng) = 0;
};

struct Evaluation {
    judge::Winner winner = judge::Winner::inconclusive;
    std::string rationale;
    std::uint64_t oracle_calls = 0;
    std::optional<double> candidate_score;
    std::optional<double> incumbent_score;
};

// Pairwise evaluator E(x, x*) -> (p, r).
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual Evaluation evaluate(const Artifact& candidate, const Artifact& incumbent, stats::RngStream& rng) = 0;
    // Absolute score for scored domains; used for the initial incumbent.
    virtual std::optional<double> score(const Artifact&) { return std::nullopt; }
};

// Evaluator backed by the order-swapped judge protocol.
class JudgeEvaluator : public Evaluator {
public:
    JudgeEvaluator(judge::JudgeBackend& backend, std::string rubric, int max_attempts = judge::kMaxJudgeAttempts)
        : backend_(backend), rubric_(std::move(rubric)), max_attempts_(max_attempts) {}

    Evaluation evaluate(const Artifact& candidate, const Artifact& incumbent, stats::RngStream&) override {
        auto out = judge::compare(candidate, incumbent, backend_, rubric_, max_attempts_);
        last_ = out;
        return {out.winner, out.rationale, out.oracle_calls, std::nullopt, std::nullopt};
    }

    const judge::ComparisonOutcome& last_outcome() const noexcept { return last_; }

private:
    judge::JudgeBackend& backend_;
    std::string rubric_;
    int max_attempts_;
    judge::ComparisonOutcome last_;
};

inline constexpr const char* kFormatFailure = "output failed format validation";

// Bounded retries around Generator::initialize.
inline Artifact init_artifact(Domain domain, Generator& generator, const std::string& task, stats::RngStream& rng,
                              int max_attempts = 3) {
    if (task.empty()) throw InputError("init_artifact: task description is empty");
    std::string last;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            auto rng_attempt = rng.fork(static_cast<std::uint64_t>(attempt));
            Artifact a = generator.initialize(task, rng_attempt);
            a.domain = domain;
            if (a.id.empty()) a.id = "c0";
            a.validate();
            return a;
        } catch (const BackendError& e) {
            last = e.what();
        } catch (const InputError& e) {
            last = e.what();
        }
    }
    throw InitializationError("initial artifact could not be produced: " + last);
}

}  // namespace fdescent
