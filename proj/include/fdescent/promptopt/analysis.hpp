#pragma once
// Pairwise prompt comparison: quadrants, hypotheses, tagging, lift and
// significance filtering.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fdescent/error.hpp"
#include "fdescent/llm/chat.hpp"
#include "fdescent/stats/fisher.hpp"
#include "fdescent/util/log.hpp"
#include "fdescent/util/text.hpp"

namespace fdescent::promptopt {

enum class Quadrant { A_wins, B_wins, tie_fail, tie_success };
inline constexpr std::array<Quadrant, 4> kQuadrants = {Quadrant::A_wins, Quadrant::B_wins, Quadrant::tie_fail,
                                                       Quadrant::tie_success};

inline std::string to_string(Quadrant q) {
    switch (q) {
        case Quadrant::A_wins: return "A_wins";
        case Quadrant::B_wins: return "B_wins";
        case Quadrant::tie_fail: return "tie_fail";
        case Quadrant::tie_success: return "tie_success";
    }
    return "?";
}

inline std::optional<Quadrant> parse_quadrant(std::string_view s) {
    for (auto q : kQuadrants) {
        if (util::iequals(s, to_string(q))) return q;
    }
    return std::nullopt;
}

inline Quadrant quadrant_of(bool a_ok, bool b_ok) {
    if (a_ok && !b_ok) return Quadrant::A_wins;
    if (!a_ok && b_ok) return Quadrant::B_wins;
    return a_ok ? Quadrant::tie_success : Quadrant::tie_fail;
}

struct Quadrants {
    std::map<Quadrant, std::set<std::string>> members;

    const std::set<std::string>& operator[](Quadrant q) const {
        static const std::set<std::string> empty;
        auto it = members.find(q);
        return it == members.end() ? empty : it->second;
    }
    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& [q, ids] : members) n += ids.size();
        return n;
    }
    std::optional<Quadrant> find(const std::string& id) const {
        for (const auto& [q, ids] : members) {
            if (ids.contains(id)) return q;
        }
        return std::nullopt;
    }
};

inline Quadrants stratify(const std::map<std::string, bool>& a, const std::map<std::string, bool>& b) {
    if (a.size() != b.size()) throw InputError("stratify: outcome sets differ in size");
    Quadrants out;
    for (auto q : kQuadrants) out.members[q];
    for (const auto& [id, a_ok] : a) {
        auto it = b.find(id);
        if (it == b.end()) throw InputError("stratify: id '" + id + "' missing from B outcomes");
        out.members[quadrant_of(a_ok, it->second)].insert(id);
    }
    return out;
}

enum class HypothesisKind { input_characteristic, output_pattern };

inline std::string to_string(HypothesisKind k) {
    return k == HypothesisKind::input_characteristic ? "input_characteristic" : "output_pattern";
}

struct Hypothesis {
    std::string text;
    HypothesisKind kind = HypothesisKind::input_characteristic;
    std::optional<Quadrant> origin;
};

inline constexpr std::size_t kHypothesesPerKind = 20;

// Lines of the form "- [quadrant] text" or "1. text"; exact duplicates dropped.
inline std::vector<Hypothesis> parse_hypotheses(std::string_view response, HypothesisKind kind,
                                                std::size_t limit = kHypothesesPerKind) {
    std::vector<Hypothesis> out;
    std::set<std::string> seen;
    for (const auto& line : util::lines(response)) {
        auto s = util::trim(line);
        if (s.starts_with("- ") || s.starts_with("* ")) {
            s.remove_prefix(2);
        } else {
            std::size_t i = 0;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            if (i == 0 || i + 1 >= s.size() || (s[i] != '.' && s[i] != ')')) continue;
            s.remove_prefix(i + 1);
        }
        s = util::trim(s);
        Hypothesis h{"", kind, std::nullopt};
        if (s.starts_with("[")) {
            if (auto close = s.find(']'); close != std::string_view::npos) {
                h.origin = parse_quadrant(s.substr(1, close - 1));
                if (h.origin) s = util::trim(s.substr(close + 1));
            }
        }
        h.text = std::string(s);
        if (h.text.empty() || !seen.insert(h.text).second) continue;
        out.push_back(std::move(h));
        if (out.size() == limit) break;
    }
    return out;
}

struct ExampleRecord {
    std::string id;
    std::string input;
    std::string output_a;
    std::string output_b;
    double score_a = 0.0;
    double score_b = 0.0;
    std::string feedback;
};

inline llm::ChatRequest hypothesis_request(const std::vector<ExampleRecord>& examples, const Quadrants& quads,
                                           HypothesisKind kind, std::string model,
                                           std::size_t count = kHypothesesPerKind) {
    std::string s = "Two prompts, A and B, were run on the same examples. Each example below is labelled with its "
                    "outcome: A_wins (A succeeds and B fails), B_wins, tie_fail (both fail) or tie_success.\n\n";
    for (const auto& e : examples) {
        const auto q = quads.find(e.id);
        if (!q || *q == Quadrant::tie_success) continue;
        s += "### " + e.id + " [" + to_string(*q) + "]\nInput: " + e.input + "\n";
        if (kind == HypothesisKind::output_pattern) {
            s += "Output A: " + e.output_a + "\nOutput B: " + e.output_b + "\n";
            if (!e.feedback.empty()) s += "Evaluation feedback: " + e.feedback + "\n";
        }
        s += "\n";
    }
    s += kind == HypothesisKind::input_characteristic
             ? "Propose " + std::to_string(count) +
                   " hypotheses about characteristics of the INPUT that may explain where the outcomes differ."
             : "Propose " + std::to_string(count) +
                   " hypotheses about patterns in the OUTPUTS or feedback that may explain where the outcomes differ.";
    s += " Each must be a predicate that can be checked on a single example. Write one per line as "
         "\"- [quadrant] hypothesis\".";
    llm::ChatRequest req;
    req.model = std::move(model);
    req.temperature = llm::kGenerationTemperature;
    req.messages = {{llm::Role::user, s}};
    return req;
}

inline std::vector<Hypothesis> generate_hypotheses(llm::ChatBackend& chat, const std::vector<ExampleRecord>& examples,
                                                   const Quadrants& quads, HypothesisKind kind, std::string model = {},
                                                   const llm::RetryPolicy& retry = {}) {
    return parse_hypotheses(llm::complete(chat, hypothesis_request(examples, quads, kind, std::move(model)), retry),
                            kind);
}

inline llm::ChatRequest tag_request(const std::vector<Hypothesis>& hyps, const ExampleRecord& e, std::string model) {
    std::string s = "For each numbered hypothesis, answer 1 if it holds for this example and 0 otherwise.\n\n";
    s += "Input: " + e.input + "\nOutput A: " + e.output_a + "\nOutput B: " + e.output_b + "\n";
    if (!e.feedback.empty()) s += "Feedback: " + e.feedback + "\n";
    s += "\nHypotheses:\n";
    for (std::size_t i = 0; i < hyps.size(); ++i) s += std::to_string(i + 1) + ". " + hyps[i].text + "\n";
    s += "\nReply with exactly " + std::to_string(hyps.size()) + " comma-separated labels, e.g. 1,0,1.";
    llm::ChatRequest req;
    req.model = std::move(model);
    req.temperature = llm::kJudgeTemperature;
    req.messages = {{llm::Role::user, s}};
    return req;
}

// Labels other than 0/1, and missing labels, become 0 with a warning.
inline std::vector<bool> parse_tags(std::string_view response, std::size_t n) {
    std::vector<bool> out(n, false);
    std::string body(util::trim(response));
    for (const auto& line : util::lines(response)) {
        if (line.find(',') != std::string::npos) body = std::string(util::trim(line));
    }
    const auto parts = util::split(body, ',');
    bool clean = parts.size() == n;
    for (std::size_t i = 0; i < std::min(n, parts.size()); ++i) {
        const auto t = util::trim(parts[i]);
        if (t == "1") {
            out[i] = true;
        } else if (t != "0") {
            clean = false;
        }
    }
    if (!clean) log::warn("tagger reply malformed, unparseable labels set to 0: " + std::string(response));
    return out;
}

struct TagResult {
    std::map<std::string, std::vector<bool>> tags;
    std::map<std::string, std::string> skipped;  // id -> error
};

// One request per example, at most `max_in_flight` concurrently.
inline TagResult tag_examples(const std::vector<Hypothesis>& hyps, const std::vector<ExampleRecord>& examples,
                              llm::ChatBackend& backend, std::string model = {}, std::size_t max_in_flight = 8,
                              const llm::RetryPolicy& retry = {}) {
    if (hyps.empty()) throw InputError("tag_examples: no hypotheses");
    std::vector<llm::ChatRequest> reqs;
    for (const auto& e : examples) reqs.push_back(tag_request(hyps, e, model));
    const auto res = llm::complete_many(backend, reqs, max_in_flight, retry);
    TagResult out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (res[i].ok()) {
            out.tags[examples[i].id] = parse_tags(*res[i].text, hyps.size());
        } else {
            log::warn("tagging skipped example " + examples[i].id + ": " + res[i].error);
            out.skipped[examples[i].id] = res[i].error;
        }
    }
    return out;
}

struct LiftStat {
    std::size_t hypothesis = 0;  // index into the hypothesis list
    Quadrant quadrant = Quadrant::A_wins;
    std::size_t support = 0;
    double conditional = 0.0;
    double base = 0.0;
    double lift = 0.0;
    double p_value = 1.0;
    stats::Table2x2 table{};
};

// Over examples that are both tagged and stratified. Rows: tag 1/0; columns:
// in quadrant yes/no.
inline std::vector<LiftStat> compute_lift(const std::map<std::string, std::vector<bool>>& tags, const Quadrants& quads,
                                          std::size_t n_hypotheses) {
    std::vector<std::pair<const std::vector<bool>*, Quadrant>> rows;
    for (const auto& [id, t] : tags) {
        if (t.size() != n_hypotheses) throw InputError("compute_lift: tag vector for '" + id + "' has wrong length");
        if (auto q = quads.find(id)) rows.emplace_back(&t, *q);
    }
    std::vector<LiftStat> out;
    const auto n = rows.size();
    if (n == 0) return out;
    for (std::size_t h = 0; h < n_hypotheses; ++h) {
        for (auto q : kQuadrants) {
            std::uint64_t a = 0, b = 0, c = 0, d = 0;
            for (const auto& [t, rq] : rows) {
                const bool tagged = (*t)[h];
                const bool in = rq == q;
                (tagged ? (in ? a : b) : (in ? c : d))++;
            }
            if (a + b == 0 || a + c == 0) continue;
            LiftStat s;
            s.hypothesis = h;
            s.quadrant = q;
            s.support = a;
            s.conditional = static_cast<double>(a) / static_cast<double>(a + b);
            s.base = static_cast<double>(a + c) / static_cast<double>(n);
            s.lift = s.conditional / s.base;
            s.table = {a, b, c, d};
            s.p_value = stats::fisher_exact_two_sided(s.table);
            out.push_back(s);
        }
    }
    return out;
}

inline constexpr double kMaxP = 0.1;
inline constexpr std::size_t kMinSupport = 3;
inline constexpr double kMinLiftWins = 2.0;
inline constexpr double kMinLiftFail = 1.5;

// tie_success has no lift threshold and never passes.
inline bool significant(const LiftStat& s) {
    double min_lift = 0.0;
    switch (s.quadrant) {
        case Quadrant::A_wins:
        case Quadrant::B_wins: min_lift = kMinLiftWins; break;
        case Quadrant::tie_fail: min_lift = kMinLiftFail; break;
        case Quadrant::tie_success: return false;
    }
    return s.p_value < kMaxP && s.support >= kMinSupport && s.lift >= min_lift;
}

inline std::vector<LiftStat> filter_significant(const std::vector<LiftStat>& all) {
    std::vector<LiftStat> out;
    std::copy_if(all.begin(), all.end(), std::back_inserter(out), significant);
    return out;
}

inline constexpr const char* kNoFindings = "No statistically validated differences between prompt A and prompt B.";

inline std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", p);
    return buf;
}

inline std::string summarize_findings(std::vector<LiftStat> findings, const std::vector<Hypothesis>& hyps) {
    if (findings.empty()) return kNoFindings;
    std::stable_sort(findings.begin(), findings.end(), [](const LiftStat& x, const LiftStat& y) {
        if (x.lift != y.lift) return x.lift > y.lift;
        return x.p_value < y.p_value;
    });
    std::string s = "Statistically validated differences between prompt A and prompt B:\n";
    for (const auto& f : findings) {
        const auto& h = hyps.at(f.hypothesis);
        s += "- [" + to_string(f.quadrant) + "] " + h.text + " (" + to_string(h.kind) + "; lift " +
             util::fixed(f.lift, 2) + ", p=" + format_p(f.p_value) + ", support " + std::to_string(f.support) + ")\n";
    }
    return s;
}

}  // namespace fdescent::promptopt
