#pragma once
// JSONL trajectory encoding and state reconstruction for resume.

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdescent/core/loop.hpp"

namespace fdescent {

using ojson = nlohmann::ordered_json;

namespace detail {

inline ojson opt_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

inline std::optional<double> read_opt_number(const ojson& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

inline judge::Winner parse_winner(const std::string& s) {
    if (s == "candidate") return judge::Winner::candidate;
    if (s == "incumbent") return judge::Winner::incumbent;
    if (s == "inconclusive") return judge::Winner::inconclusive;
    throw InputError("trajectory: unknown verdict '" + s + "'");
}

}  // namespace detail

inline ojson to_json(const CandidateLog& c) {
    ojson j;
    j["candidate_id"] = c.candidate_id;
    j["payload"] = c.payload;
    if (!c.metadata.empty()) j["metadata"] = c.metadata;
    j["verdict"] = judge::to_string(c.winner);
    j["format_error"] = c.format_error;
    j["score"] = detail::opt_number(c.score);
    j["judge_rationale"] = c.judge_rationale;
    j["recorded_rationale"] = c.recorded_rationale ? ojson(*c.recorded_rationale) : ojson(nullptr);
    j["oracle_calls"] = c.oracle_calls;
    return j;
}

inline ojson to_json(const TrajectoryEntry& e) {
    ojson j;
    j["t"] = e.t;
    j["candidate_id"] = e.candidate_id;
    j["preference"] = e.preference ? 1 : 0;
    j["accepted"] = e.accepted;
    if (e.score) j["score"] = *e.score;
    j["rationale"] = e.rationale;
    j["judge_rationale"] = e.judge_rationale;
    j["oracle_calls"] = e.oracle_calls;
    j["timestamp"] = e.timestamp;
    j["incumbent_id"] = e.incumbent_id;
    j["incumbent_score"] = detail::opt_number(e.incumbent_score);
    j["streak"] = e.streak;
    j["history_size"] = e.history_size;
    ojson batch = ojson::array();
    for (const auto& c : e.batch) batch.push_back(to_json(c));
    j["batch"] = std::move(batch);
    return j;
}

inline CandidateLog candidate_log_from_json(const ojson& j) {
    CandidateLog c;
    c.candidate_id = j.at("candidate_id").get<std::string>();
    c.payload = j.at("payload").get<std::string>();
    if (j.contains("metadata")) c.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    c.winner = detail::parse_winner(j.at("verdict").get<std::string>());
    c.format_error = j.at("format_error").get<bool>();
    c.score = detail::read_opt_number(j, "score");
    c.judge_rationale = j.at("judge_rationale").get<std::string>();
    if (!j.at("recorded_rationale").is_null()) c.recorded_rationale = j.at("recorded_rationale").get<std::string>();
    c.oracle_calls = j.at("oracle_calls").get<std::uint64_t>();
    return c;
}

inline TrajectoryEntry entry_from_json(const ojson& j) {
    try {
        TrajectoryEntry e;
        e.t = j.at("t").get<std::uint64_t>();
        e.candidate_id = j.at("candidate_id").get<std::string>();
        e.preference = j.at("preference").get<int>() != 0;
        e.accepted = j.at("accepted").get<bool>();
        e.score = detail::read_opt_number(j, "score");
        e.rationale = j.at("rationale").get<std::string>();
        e.judge_rationale = j.at("judge_rationale").get<std::string>();
        e.oracle_calls = j.at("oracle_calls").get<std::uint64_t>();
        e.timestamp = j.at("timestamp").get<std::string>();
        e.incumbent_id = j.at("incumbent_id").get<std::string>();
        e.incumbent_score = detail::read_opt_number(j, "incumbent_score");
        e.streak = j.at("streak").get<std::uint64_t>();
        e.history_size = j.at("history_size").get<std::uint64_t>();
        for (const auto& c : j.at("batch")) e.batch.push_back(candidate_log_from_json(c));
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(std::string("trajectory line: ") + ex.what());
    }
}

inline std::string to_jsonl_line(const TrajectoryEntry& e) { return to_json(e).dump() + "\n"; }

inline std::vector<TrajectoryEntry> read_jsonl(std::istream& in) {
    std::vector<TrajectoryEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto j = ojson::parse(line, nullptr, false);
        if (j.is_discarded()) throw InputError("trajectory line " + std::to_string(n) + " is not JSON");
        out.push_back(entry_from_json(j));
    }
    return out;
}

// Replays a trajectory (t = 0 header first) into the state the loop had
// after its last line. Together with the config this is enough to continue.
inline RunState state_from_trajectory(const RunConfig& cfg, Domain domain, const std::vector<TrajectoryEntry>& lines) {
    if (lines.empty() || lines.front().t != 0 || lines.front().batch.empty()) {
        throw InputError("trajectory must start with the t = 0 header line");
    }
    const auto& h = lines.front().batch.front();
    RunState s = initial_state(cfg, Artifact{h.candidate_id, domain, h.payload, h.metadata}, h.score);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& e = lines[i];
        if (e.t != s.t + 1) throw InputError("trajectory: iteration " + std::to_string(e.t) + " out of sequence");
        const CandidateLog* chosen = nullptr;
        for (const auto& c : e.batch) {
            if (c.winner == judge::Winner::inconclusive) {
                ++s.discarded;
                continue;
            }
            if (!c.format_error) s.rationale_pool.push_back(c.judge_rationale);
            if (c.recorded_rationale) {
                s.history.push_back({c.candidate_id, c.winner == judge::Winner::candidate, *c.recorded_rationale, e.t,
                                     c.payload, c.score});
            }
            if (e.accepted && c.candidate_id == e.candidate_id) chosen = &c;
        }
        if (e.accepted) {
            if (!chosen) throw InputError("trajectory: accepted candidate missing from batch at t=" + std::to_string(e.t));
            s.incumbent = Artifact{chosen->candidate_id, domain, chosen->payload, chosen->metadata};
            if (chosen->score) s.incumbent_score = chosen->score;
            s.streak = 0;
            if (cfg.history_policy == HistoryPolicy::reset_on_accept) s.history.clear();
        } else {
            ++s.streak;
        }
        s.t = e.t;
        s.oracle_calls = e.oracle_calls;
    }
    return s;
}

}  // namespace fdescent
