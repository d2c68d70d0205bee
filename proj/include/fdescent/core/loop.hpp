#pragma once
// The propose -> compare -> record -> update loop.

#include <chrono>
#include <ctime>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdescent/core/interfaces.hpp"
#include "fdescent/judge/feedback.hpp"

namespace fdescent {

// One judged proposal inside an iteration.
struct CandidateLog {
    std::string candidate_id;
    std::string payload;
    std::map<std::string, std::string> metadata;
    judge::Winner winner = judge::Winner::inconclusive;
    bool format_error = false;
    std::optional<double> score;
    std::string judge_rationale;                  // as produced by the evaluator
    std::optional<std::string> recorded_rationale;  // what entered the history, if anything
    std::uint64_t oracle_calls = 0;

    bool operator==(const CandidateLog&) const = default;
};

struct TrajectoryEntry {
    std::uint64_t t = 0;
    std::string candidate_id;
    bool preference = false;
    bool accepted = false;
    std::optional<double> score;
    std::string rationale;
    std::string judge_rationale;
    std::uint64_t oracle_calls = 0;  // cumulative
    std::string timestamp;
    std::string incumbent_id;
    std::optional<double> incumbent_score;
    std::uint64_t streak = 0;
    std::uint64_t history_size = 0;
    std::vector<CandidateLog> batch;

    bool operator==(const TrajectoryEntry&) const = default;
};

struct RunState {
    Artifact incumbent;
    std::optional<double> incumbent_score;
    std::vector<FeedbackRecord> history;
    std::uint64_t t = 0;
    std::uint64_t streak = 0;
    std::uint64_t oracle_calls = 0;
    std::uint64_t discarded = 0;  // inconclusive comparisons
    stats::RngStream rng;
    std::vector<std::string> rationale_pool;  // every true rationale so far, donor pool for noise

    bool operator==(const RunState&) const = default;
};

inline RunState initial_state(const RunConfig& cfg, Artifact incumbent, std::optional<double> score) {
    RunState s;
    s.incumbent = std::move(incumbent);
    s.incumbent_score = score;
    s.rng = stats::RngStream(cfg.seed, stats::stream_id("run"));
    return s;
}

// Timestamp source. The logical clock maps iteration t to t seconds after the
// epoch, which keeps logs byte-stable across reruns.
using Clock = std::function<std::string(std::uint64_t t)>;

inline std::string iso8601(std::chrono::system_clock::time_point tp) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
    const std::time_t secs = static_cast<std::time_t>(ms / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
    return out;
}

inline Clock wall_clock() {
    return [](std::uint64_t) { return iso8601(std::chrono::system_clock::now()); };
}
inline Clock logical_clock() {
    return [](std::uint64_t t) {
        return iso8601(std::chrono::system_clock::time_point(std::chrono::seconds(static_cast<long long>(t))));
    };
}

inline std::string candidate_id_for(std::uint64_t t, std::uint64_t j, std::uint64_t batch) {
    return batch == 1 ? "c" + std::to_string(t) : "c" + std::to_string(t) + "-" + std::to_string(j);
}

struct StepResult {
    RunState state;
    TrajectoryEntry entry;
};

// One iteration. Works on a copy: when the generator or evaluator throws,
// the caller's state is untouched.
inline StepResult step(const RunState& in, const RunConfig& cfg, Generator& generator, Evaluator& evaluator,
                       const Clock& clock = logical_clock()) {
    cfg.validate();
    if (in.t >= cfg.T) throw ConfigError("T", "iteration budget already exhausted");
    RunState s = in;
    const std::uint64_t t = s.t + 1;
    const stats::RngStream it_rng = s.rng.fork(t);

    // All proposals see the same incumbent and history.
    std::vector<Proposal> proposals;
    for (std::uint64_t j = 0; j < cfg.batch_size; ++j) {
        auto gen_rng = it_rng.fork("generator").fork(j);
        Proposal p = generator.propose(s.incumbent, s.history, gen_rng);
        p.candidate.id = candidate_id_for(t, j, cfg.batch_size);
        p.candidate.domain = s.incumbent.domain;
        proposals.push_back(std::move(p));
    }

    std::vector<CandidateLog> logs;
    std::vector<Evaluation> evals;
    for (std::uint64_t j = 0; j < proposals.size(); ++j) {
        const auto& p = proposals[j];
        CandidateLog log{p.candidate.id, p.candidate.payload, p.candidate.metadata, judge::Winner::incumbent,
                         false, std::nullopt, {}, std::nullopt, 0};
        Evaluation ev;
        if (p.format_error || p.candidate.payload.empty()) {
            log.format_error = true;
            ev.winner = judge::Winner::incumbent;
            ev.rationale = kFormatFailure;
        } else {
            auto judge_rng = it_rng.fork("judge").fork(j);
            ev = evaluator.evaluate(p.candidate, s.incumbent, judge_rng);
        }
        log.winner = ev.winner;
        log.score = ev.candidate_score;
        log.judge_rationale = ev.rationale;
        log.oracle_calls = ev.oracle_calls;
        s.oracle_calls += ev.oracle_calls;
        if (ev.winner == judge::Winner::inconclusive) ++s.discarded;
        logs.push_back(std::move(log));
        evals.push_back(std::move(ev));
    }

    // Records for every decided comparison, in index order.
    std::vector<FeedbackRecord> records;
    std::vector<std::size_t> record_index;
    for (std::size_t j = 0; j < logs.size(); ++j) {
        if (logs[j].winner == judge::Winner::inconclusive) continue;
        records.push_back({logs[j].candidate_id, logs[j].winner == judge::Winner::candidate, logs[j].judge_rationale,
                           t, logs[j].payload, logs[j].score});
        record_index.push_back(j);
        if (!logs[j].format_error) s.rationale_pool.push_back(logs[j].judge_rationale);
    }

    // Feedback transforms: noise first, then the ablation.
    judge::NoisePolicy noise{cfg.noise_q, s.rationale_pool, it_rng.fork("noise")};
    const bool pool_ok = s.rationale_pool.size() >= 2;
    if (cfg.noise_q > 0.0 && pool_ok && cfg.ablation != Ablation::random_feedback) {
        records = judge::corrupt_feedback(std::move(records), noise);
    }
    std::vector<FeedbackRecord> kept;
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::optional<FeedbackRecord> out;
        if (cfg.ablation == Ablation::random_feedback && !pool_ok) {
            out = records[r];
        } else {
            out = judge::apply_ablation(cfg.ablation, records[r], &noise);
        }
        if (out) {
            logs[record_index[r]].recorded_rationale = out->rationale;
            kept.push_back(std::move(*out));
        }
    }

    // Pick the new incumbent among accepted candidates.
    std::optional<std::size_t> chosen;
    for (std::size_t j = 0; j < logs.size(); ++j) {
        if (logs[j].winner != judge::Winner::candidate) continue;
        if (!chosen) {
            chosen = j;
        } else if (logs[j].score && logs[*chosen].score && *logs[j].score > *logs[*chosen].score) {
            chosen = j;
        }
    }

    for (auto& r : kept) s.history.push_back(std::move(r));
    if (chosen) {
        s.incumbent = proposals[*chosen].candidate;
        if (logs[*chosen].score) s.incumbent_score = logs[*chosen].score;
        s.streak = 0;
        if (cfg.history_policy == HistoryPolicy::reset_on_accept) s.history.clear();
    } else {
        ++s.streak;
    }
    s.t = t;

    const std::size_t sel = chosen.value_or(0);
    TrajectoryEntry e;
    e.t = t;
    e.candidate_id = logs[sel].candidate_id;
    e.preference = logs[sel].winner == judge::Winner::candidate;
    e.accepted = chosen.has_value();
    e.score = logs[sel].score;
    e.rationale = logs[sel].recorded_rationale.value_or("");
    e.judge_rationale = logs[sel].judge_rationale;
    e.oracle_calls = s.oracle_calls;
    e.timestamp = clock ? clock(t) : std::string();
    e.incumbent_id = s.incumbent.id;
    e.incumbent_score = s.incumbent_score;
    e.streak = s.streak;
    e.history_size = s.history.size();
    e.batch = std::move(logs);
    return {std::move(s), std::move(e)};
}

// Header line of a trajectory: the initial incumbent at t = 0.
inline TrajectoryEntry initial_entry(const RunState& s, const Clock& clock) {
    TrajectoryEntry e;
    e.candidate_id = s.incumbent.id;
    e.accepted = true;
    e.preference = true;
    e.score = s.incumbent_score;
    e.timestamp = clock ? clock(0) : std::string();
    e.incumbent_id = s.incumbent.id;
    e.incumbent_score = s.incumbent_score;
    e.batch.push_back({s.incumbent.id, s.incumbent.payload, s.incumbent.metadata, judge::Winner::candidate, false,
                       s.incumbent_score, {}, std::nullopt, 0});
    return e;
}

enum class StopReason { budget, patience, backend_failure };

inline const char* to_string(StopReason r) noexcept {
    switch (r) {
        case StopReason::budget: return "budget";
        case StopReason::patience: return "patience";
        case StopReason::backend_failure: return "backend_failure";
    }
    return "?";
}

struct RunResult {
    RunState state;
    std::vector<TrajectoryEntry> trajectory;  // iterations only; see initial_entry for t = 0
    bool complete = true;
    StopReason stop = StopReason::budget;
    std::string error;
};

inline bool should_stop(const RunState& s, const RunConfig& cfg) {
    return s.t >= cfg.T || (cfg.patience_k > 0 && s.streak >= cfg.patience_k);
}

using EntrySink = std::function<void(const TrajectoryEntry&)>;

// Continues from `state` until the budget or the patience window ends.
// Backend failures end the run early with complete = false.
inline RunResult run(const RunConfig& cfg, RunState state, Generator& generator, Evaluator& evaluator,
                     const Clock& clock = logical_clock(), const EntrySink& sink = {}) {
    cfg.validate();
    RunResult res;
    while (!should_stop(state, cfg)) {
        try {
            auto r = step(state, cfg, generator, evaluator, clock);
            state = std::move(r.state);
            if (sink) sink(r.entry);
            res.trajectory.push_back(std::move(r.entry));
        } catch (const BackendError& e) {
            res.complete = false;
            res.stop = StopReason::backend_failure;
            res.error = e.what();
            break;
        }
    }
    if (res.complete) res.stop = state.t >= cfg.T ? StopReason::budget : StopReason::patience;
    res.state = std::move(state);
    return res;
}

inline RunResult run(const RunConfig& cfg, Domain domain, Generator& generator, Evaluator& evaluator,
                     const std::string& task, const Clock& clock = logical_clock(), const EntrySink& sink = {}) {
    cfg.validate();
    auto init_rng = stats::RngStream(cfg.seed, stats::stream_id("init"));
    Artifact a = init_artifact(domain, generator, task, init_rng);
    const auto score = evaluator.score(a);
    RunState s = initial_state(cfg, std::move(a), score);
    if (sink) sink(initial_entry(s, clock));
    return run(cfg, std::move(s), generator, evaluator, clock, sink);
}

}  // namespace fdescent
