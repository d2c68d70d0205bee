#pragma once
// Desk-scale test domain. An artifact is a fixed-length lowercase string and
// its score is minus the L1 distance (letter positions) to a hidden target
// derived from the seed. The exact judge explains each verdict with one
// concrete edit toward the target; the mock generator reads those edits back.

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fdescent/core/interfaces.hpp"

namespace fdescent::synthetic {

inline constexpr std::size_t kDefaultLength = 40;

struct Edit {
    std::size_t position = 0;
    int delta = 0;

    bool operator==(const Edit&) const = default;
};

inline std::string format_edit(const Edit& e) {
    return "edit: position " + std::to_string(e.position) + " " + (e.delta >= 0 ? "+" : "") + std::to_string(e.delta);
}

// Finds "edit: position <i> <+/-k>" anywhere in the text.
inline std::optional<Edit> parse_edit(std::string_view text) {
    constexpr std::string_view key = "edit: position ";
    const auto at = text.find(key);
    if (at == std::string_view::npos) return std::nullopt;
    const std::string rest(text.substr(at + key.size()));
    char* end = nullptr;
    const unsigned long pos = std::strtoul(rest.c_str(), &end, 10);
    if (end == rest.c_str() || *end != ' ') return std::nullopt;
    const char* d = end + 1;
    if (*d != '+' && *d != '-') return std::nullopt;
    char* dend = nullptr;
    const long delta = std::strtol(d, &dend, 10);
    if (dend == d + 1) return std::nullopt;
    return Edit{static_cast<std::size_t>(pos), static_cast<int>(delta)};
}

class Task {
public:
    explicit Task(std::string target) : target_(std::move(target)) {
        if (target_.empty() || !well_formed_chars(target_)) throw ConfigError("target", "must be non-empty a-z text");
    }

    static Task from_seed(std::uint64_t seed, std::size_t length = kDefaultLength) {
        stats::RngStream rng(seed, stats::stream_id("synthetic-target"));
        std::string t(length, 'a');
        for (auto& c : t) c = static_cast<char>('a' + rng.uniform_index(26));
        return Task(std::move(t));
    }

    const std::string& target() const noexcept { return target_; }
    std::size_t length() const noexcept { return target_.size(); }

    bool well_formed(std::string_view s) const noexcept { return s.size() == target_.size() && well_formed_chars(s); }

    double score(std::string_view s) const {
        if (!well_formed(s)) throw EvaluationError("synthetic: malformed artifact");
        long d = 0;
        for (std::size_t i = 0; i < s.size(); ++i) d += std::labs(static_cast<long>(s[i]) - target_[i]);
        return d == 0 ? 0.0 : -static_cast<double>(d);
    }

    std::vector<std::size_t> mismatches(std::string_view s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] != target_[i]) out.push_back(i);
        }
        return out;
    }

    Edit correction(std::string_view s, std::size_t i) const { return {i, target_[i] - s[i]}; }

private:
    static bool well_formed_chars(std::string_view s) noexcept {
        for (char c : s) {
            if (c < 'a' || c > 'z') return false;
        }
        return true;
    }

    std::string target_;
};

inline std::string apply_edit(std::string s, const Edit& e) {
    if (e.position >= s.size()) return s;
    const int v = std::clamp(s[e.position] - 'a' + e.delta, 0, 25);
    s[e.position] = static_cast<char>('a' + v);
    return s;
}

// Single-position difference between two equal-length strings, if that is
// all that separates them.
inline std::optional<Edit> single_edit(std::string_view from, std::string_view to) {
    if (from.size() != to.size()) return std::nullopt;
    std::optional<Edit> e;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i] == to[i]) continue;
        if (e) return std::nullopt;
        e = Edit{i, to[i] - from[i]};
    }
    return e;
}

// Exact ground-truth judge; one oracle call per comparison.
class ExactJudge : public Evaluator {
public:
    explicit ExactJudge(Task task) : task_(std::move(task)) {}

    const Task& task() const noexcept { return task_; }

    std::optional<double> score(const Artifact& a) override {
        if (!task_.well_formed(a.payload)) return std::nullopt;
        return task_.score(a.payload);
    }

    Evaluation evaluate(const Artifact& candidate, const Artifact& incumbent, stats::RngStream& rng) override {
        Evaluation ev;
        ev.oracle_calls = 1;
        const double si = task_.score(incumbent.payload);
        ev.incumbent_score = si;
        if (!task_.well_formed(candidate.payload)) {
            ev.winner = judge::Winner::incumbent;
            ev.rationale = "candidate is malformed: expected " + std::to_string(task_.length()) + " letters a-z";
            return ev;
        }
        const double sc = task_.score(candidate.payload);
        ev.candidate_score = sc;
        const bool better = sc > si;
        ev.winner = better ? judge::Winner::candidate : judge::Winner::incumbent;
        const std::string& w = better ? candidate.payload : incumbent.payload;
        ev.rationale = "candidate distance " + std::to_string(static_cast<long>(-sc)) + " vs incumbent distance " +
                       std::to_string(static_cast<long>(-si)) + ". ";
        const auto miss = task_.mismatches(w);
        if (miss.empty()) {
            ev.rationale += "the winner matches the target exactly";
        } else {
            ev.rationale += "to improve the winner, " + format_edit(task_.correction(w, miss[rng.uniform_index(miss.size())]));
        }
        return ev;
    }

private:
    Task task_;
};

// Mock generator. It applies the newest untried edit named in the history;
// failing that it reverses the direction of a rejected single edit (all a
// binary signal allows); failing that it makes a random edit.
class HintFollowingGenerator : public Generator {
public:
    explicit HintFollowingGenerator(std::size_t length = kDefaultLength, int max_step = 4)
        : length_(length), max_step_(max_step) {}

    Artifact initialize(const std::string&, stats::RngStream&) override {
        return {"c0", Domain::synthetic, std::string(length_, 'a'), {}};
    }

    Proposal propose(const Artifact& incumbent, const std::vector<FeedbackRecord>& history,
                     stats::RngStream& rng) override {
        const std::string& x = incumbent.payload;
        std::set<std::string> tried{x};
        for (const auto& r : history) tried.insert(r.candidate_payload);
        auto fresh = [&](const std::string& y) { return !tried.contains(y); };

        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (auto e = parse_edit(it->rationale)) {
                auto y = apply_edit(x, *e);
                if (fresh(y)) return make(std::move(y), "hint");
            }
        }
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (it->preference) continue;
            if (auto e = single_edit(x, it->candidate_payload)) {
                auto y = apply_edit(x, {e->position, -e->delta});
                if (fresh(y)) return make(std::move(y), "reverse");
            }
        }
        for (int attempt = 0; attempt < 64; ++attempt) {
            const Edit e{static_cast<std::size_t>(rng.uniform_index(x.size())),
                         static_cast<int>(rng.uniform_int(1, max_step_)) * (rng.bernoulli(0.5) ? 1 : -1)};
            auto y = apply_edit(x, e);
            if (fresh(y)) return make(std::move(y), "random");
        }
        throw BackendError("synthetic generator: no untried edit found");
    }

private:
    static Proposal make(std::string payload, const char* how) {
        return {Artifact{"", Domain::synthetic, std::move(payload), {{"strategy", how}}}, std::nullopt};
    }

    std::size_t length_;
    int max_step_;
};

}  // namespace fdescent::synthetic
