#pragma once
// Prompt-set artifacts, example ingestion, and the evaluator/generator pair
// for prompt optimisation.

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "fdescent/core/interfaces.hpp"
#include "fdescent/llm/template.hpp"
#include "fdescent/promptopt/analysis.hpp"

namespace fdescent::promptopt {

// An example counts as solved when its score reaches this value.
inline constexpr double kSuccessThreshold = 0.5;

inline ExampleRecord example_from_json(const nlohmann::json& j) {
    ExampleRecord e;
    try {
        e.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        e.input = j.value("input", std::string());
        e.output_a = j.value("output_A", std::string());
        e.output_b = j.value("output_B", std::string());
        e.score_a = j.at("score_A").get<double>();
        e.score_b = j.at("score_B").get<double>();
        if (j.contains("feedback")) e.feedback = j["feedback"].is_string() ? j["feedback"].get<std::string>() : j["feedback"].dump();
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(std::string("example record: ") + ex.what());
    }
    return e;
}

inline std::vector<ExampleRecord> read_examples_jsonl(std::string_view text) {
    std::vector<ExampleRecord> out;
    std::set<std::string> ids;
    std::size_t lineno = 0;
    for (const auto& line : util::lines(text)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw InputError("examples line " + std::to_string(lineno) + " is not JSON");
        out.push_back(example_from_json(j));
        if (!ids.insert(out.back().id).second) throw InputError("duplicate example id '" + out.back().id + "'");
    }
    return out;
}

inline Quadrants stratify(const std::vector<ExampleRecord>& examples, double threshold = kSuccessThreshold) {
    std::map<std::string, bool> a, b;
    for (const auto& e : examples) {
        a[e.id] = e.score_a >= threshold;
        b[e.id] = e.score_b >= threshold;
    }
    return stratify(a, b);
}

struct Analysis {
    Quadrants quadrants;
    std::vector<Hypothesis> hypotheses;
    TagResult tags;
    std::vector<LiftStat> stats;
    std::vector<LiftStat> findings;
    std::string summary;
};

inline Analysis analyze_from_tags(const std::vector<ExampleRecord>& examples, std::vector<Hypothesis> hyps,
                                  TagResult tags, double threshold = kSuccessThreshold) {
    Analysis a;
    a.quadrants = stratify(examples, threshold);
    a.hypotheses = std::move(hyps);
    a.tags = std::move(tags);
    if (!a.hypotheses.empty()) a.stats = compute_lift(a.tags.tags, a.quadrants, a.hypotheses.size());
    a.findings = filter_significant(a.stats);
    a.summary = summarize_findings(a.findings, a.hypotheses);
    return a;
}

struct AnalysisOptions {
    std::string model;
    double success_threshold = kSuccessThreshold;
    std::size_t max_in_flight = 8;
    llm::RetryPolicy retry;
};

inline Analysis analyze(const std::vector<ExampleRecord>& examples, llm::ChatBackend& chat,
                        const AnalysisOptions& opt = {}) {
    const auto quads = stratify(examples, opt.success_threshold);
    std::vector<Hypothesis> hyps;
    std::set<std::string> seen;
    for (auto kind : {HypothesisKind::input_characteristic, HypothesisKind::output_pattern}) {
        for (auto& h : generate_hypotheses(chat, examples, quads, kind, opt.model, opt.retry)) {
            if (seen.insert(h.text).second) hyps.push_back(std::move(h));
        }
    }
    TagResult tags;
    if (!hyps.empty()) tags = tag_examples(hyps, examples, chat, opt.model, opt.max_in_flight, opt.retry);
    return analyze_from_tags(examples, std::move(hyps), std::move(tags), opt.success_threshold);
}

inline nlohmann::ordered_json findings_to_json(const Analysis& a) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : a.findings) {
        const auto& h = a.hypotheses.at(f.hypothesis);
        arr.push_back({{"hypothesis", h.text},
                       {"kind", to_string(h.kind)},
                       {"quadrant", to_string(f.quadrant)},
                       {"support", f.support},
                       {"conditional", f.conditional},
                       {"base", f.base},
                       {"lift", f.lift},
                       {"p_value", f.p_value},
                       {"table", {f.table.a, f.table.b, f.table.c, f.table.d}}});
    }
    return arr;
}

// Index of the highest score; the first one wins ties.
inline std::size_t select_best(const std::vector<double>& scores) {
    if (scores.empty()) throw InputError("select_best: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

// ---- prompt sets ----

using PromptSet = std::map<std::string, std::string>;

namespace detail {
class DictParser {
public:
    explicit DictParser(std::string_view s) : s_(s) {}

    PromptSet parse() {
        PromptSet out;
        ws();
        expect('{');
        ws();
        if (peek() == '}') {
            ++i_;
            return out;
        }
        for (;;) {
            ws();
            auto key = strings();
            ws();
            expect(':');
            ws();
            auto value = strings();
            if (!out.emplace(key, value).second) fail("duplicate key '" + key + "'");
            ws();
            if (peek() == ',') {
                ++i_;
                ws();
                if (peek() == '}') break;
                continue;
            }
            break;
        }
        expect('}');
        return out;
    }

private:
    char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
    void fail(const std::string& what) const {
        throw ParseError("prompt dict: " + what + " at offset " + std::to_string(i_), std::string(s_));
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++i_;
    }
    void ws() {
        while (i_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
                ++i_;
            } else if (s_[i_] == '#') {
                while (i_ < s_.size() && s_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }
    // Adjacent literals concatenate, as in Python.
    std::string strings() {
        std::string out = literal();
        for (;;) {
            const auto save = i_;
            ws();
            if (peek() != '"' && peek() != '\'') {
                i_ = save;
                return out;
            }
            out += literal();
        }
    }
    std::string literal() {
        const char q = peek();
        if (q != '"' && q != '\'') fail("expected a string");
        const bool triple = s_.substr(i_, 3) == std::string(3, q);
        i_ += triple ? 3 : 1;
        std::string out;
        while (i_ < s_.size()) {
            const char c = s_[i_];
            if (triple ? s_.substr(i_, 3) == std::string(3, q) : c == q) {
                i_ += triple ? 3 : 1;
                return out;
            }
            if (!triple && c == '\n') fail("newline in string");
            if (c == '\\' && i_ + 1 < s_.size()) {
                const char e = s_[i_ + 1];
                i_ += 2;
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '\n': break;
                    default: out += e;
                }
                continue;
            }
            out += c;
            ++i_;
        }
        fail("unterminated string");
        return out;
    }

    std::string_view s_;
    std::size_t i_ = 0;
};
}  // namespace detail

// Accepts a Python dict literal of string keys and values (JSON is a subset).
inline PromptSet parse_prompt_dict(std::string_view text) { return detail::DictParser(text).parse(); }

// The last fenced code block, or the whole text when there is none.
inline std::string last_code_block(std::string_view text) {
    const auto close = text.rfind("```");
    if (close == std::string_view::npos || close == 0) return std::string(text);
    const auto open = text.rfind("```", close - 1);
    if (open == std::string_view::npos) return std::string(text);
    auto body = text.substr(open + 3, close - open - 3);
    if (auto nl = body.find('\n'); nl != std::string_view::npos && util::trim(body.substr(0, nl)).find_first_of("{'\"") ==
                                                                      std::string_view::npos) {
        body.remove_prefix(nl + 1);  // language tag
    }
    return std::string(body);
}

inline void validate_promptset(const PromptSet& p, const std::vector<std::string>& module_keys) {
    for (const auto& k : module_keys) {
        auto it = p.find(k);
        if (it == p.end()) throw InputError("prompt set lacks module key '" + k + "'");
        if (util::trim(it->second).empty()) throw InputError("prompt for module '" + k + "' is empty");
    }
    if (p.size() != module_keys.size()) {
        for (const auto& [k, v] : p) {
            if (std::find(module_keys.begin(), module_keys.end(), k) == module_keys.end()) {
                throw InputError("prompt set has unknown module key '" + k + "'");
            }
        }
    }
}

// Canonical payload: a JSON object in module-key order.
inline std::string promptset_payload(const PromptSet& p, const std::vector<std::string>& module_keys) {
    validate_promptset(p, module_keys);
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : module_keys) j[k] = p.at(k);
    return j.dump(2);
}

inline PromptSet parse_promptset_payload(const std::string& payload, const std::vector<std::string>& module_keys) {
    auto p = parse_prompt_dict(payload);
    validate_promptset(p, module_keys);
    return p;
}

// ---- evaluation ----

enum class Split { train, validation };

struct ExampleOutcome {
    std::string id;
    std::string input;
    std::string output;
    double score = 0.0;
    std::string feedback;
};

// Runs a prompt set on a data split. Program execution lives behind this.
class ExampleOutcomeProvider {
public:
    virtual ~ExampleOutcomeProvider() = default;
    virtual std::vector<ExampleOutcome> run(const PromptSet& prompts, Split split) = 0;
};

inline double mean_score(const std::vector<ExampleOutcome>& o) {
    if (o.empty()) return 0.0;
    double s = 0.0;
    for (const auto& x : o) s += x.score;
    return s / static_cast<double>(o.size());
}

// A = incumbent, B = candidate.
inline std::vector<ExampleRecord> pair_outcomes(const std::vector<ExampleOutcome>& a, const std::vector<ExampleOutcome>& b) {
    std::map<std::string, const ExampleOutcome*> by_id;
    for (const auto& x : b) by_id[x.id] = &x;
    if (by_id.size() != a.size()) throw InputError("outcome sets for A and B differ");
    std::vector<ExampleRecord> out;
    for (const auto& x : a) {
        auto it = by_id.find(x.id);
        if (it == by_id.end()) throw InputError("example '" + x.id + "' missing from B outcomes");
        std::string fb;
        if (!x.feedback.empty()) fb += "A: " + x.feedback;
        if (!it->second->feedback.empty()) fb += std::string(fb.empty() ? "" : "\n") + "B: " + it->second->feedback;
        out.push_back({x.id, x.input, x.output, it->second->output, x.score, it->second->score, fb});
    }
    return out;
}

// Winner by validation accuracy (strict); rationale from the training-split
// pairwise analysis. oracle_calls counts example executions not cached yet.
class PromptComparisonEvaluator : public Evaluator {
public:
    PromptComparisonEvaluator(ExampleOutcomeProvider& provider, llm::ChatBackend& chat,
                              std::vector<std::string> module_keys, AnalysisOptions opt = {})
        : provider_(provider), chat_(chat), keys_(std::move(module_keys)), opt_(std::move(opt)) {}

    std::optional<double> score(const Artifact& a) override {
        std::uint64_t calls = 0;
        return mean_score(outcomes(a.payload, calls).validation);
    }

    Evaluation evaluate(const Artifact& candidate, const Artifact& incumbent, stats::RngStream&) override {
        Evaluation ev;
        const auto& inc = outcomes(incumbent.payload, ev.oracle_calls);
        const auto& cand = outcomes(candidate.payload, ev.oracle_calls);
        const double si = mean_score(inc.validation), sc = mean_score(cand.validation);
        ev.incumbent_score = si;
        ev.candidate_score = sc;
        ev.winner = select_best({si, sc}) == 1 ? judge::Winner::candidate : judge::Winner::incumbent;
        last_ = analyze(pair_outcomes(inc.train, cand.train), chat_, opt_);
        ev.rationale = "Validation accuracy: A (current) " + util::fixed(si, 3) + ", B (candidate) " + util::fixed(sc, 3) +
                       ".\n" + last_.summary;
        return ev;
    }

    const Analysis& last_analysis() const noexcept { return last_; }

private:
    struct Cached {
        std::vector<ExampleOutcome> train;
        std::vector<ExampleOutcome> validation;
    };

    const Cached& outcomes(const std::string& payload, std::uint64_t& calls) {
        if (auto it = cache_.find(payload); it != cache_.end()) return it->second;
        const auto p = parse_promptset_payload(payload, keys_);
        Cached c{provider_.run(p, Split::train), provider_.run(p, Split::validation)};
        calls += c.train.size() + c.validation.size();
        return cache_.emplace(payload, std::move(c)).first->second;
    }

    ExampleOutcomeProvider& provider_;
    llm::ChatBackend& chat_;
    std::vector<std::string> keys_;
    AnalysisOptions opt_;
    std::map<std::string, Cached> cache_;
    Analysis last_;
};

class PromptImprover : public Generator {
public:
    struct Options {
        std::string model;
        double temperature = llm::kGenerationTemperature;
        llm::RetryPolicy retry;
    };

    PromptImprover(llm::ChatBackend& chat, std::vector<std::string> module_keys, PromptSet initial, Options opt)
        : chat_(chat),
          keys_(std::move(module_keys)),
          initial_(std::move(initial)),
          opt_(std::move(opt)),
          template_(llm::PromptTemplate::load("prompt_improver")) {
        validate_promptset(initial_, keys_);
    }
    PromptImprover(llm::ChatBackend& chat, std::vector<std::string> module_keys, PromptSet initial)
        : PromptImprover(chat, std::move(module_keys), std::move(initial), Options{}) {}

    Artifact initialize(const std::string&, stats::RngStream&) override {
        return {"c0", Domain::promptset, promptset_payload(initial_, keys_), {}};
    }

    std::string prompt(const Artifact& incumbent, const std::vector<FeedbackRecord>& history) const {
        const std::string b = history.empty() ? incumbent.payload : history.back().candidate_payload;
        std::string comparison;
        if (history.empty()) {
            comparison = "No comparisons yet.";
        } else {
            for (std::size_t i = 0; i < history.size(); ++i) {
                const auto& r = history[i];
                comparison += "### Comparison " + std::to_string(i + 1) + " (challenger " +
                              (r.preference ? "preferred" : "rejected") + ")\n" + r.rationale + "\n\n";
            }
        }
        std::string keys_desc, skeleton = "{\n";
        for (const auto& k : keys_) {
            keys_desc += "- \"" + k + "\": the instructions for the " + k + " stage\n";
            skeleton += "    \"" + k + "\": \"...\",\n";
        }
        skeleton += "}";
        return template_.render({{"prompt_a_dict", incumbent.payload},
                                 {"prompt_b_dict", b},
                                 {"comparison", comparison},
                                 {"module_keys_description", keys_desc},
                                 {"prompt_template", skeleton}});
    }

    Proposal propose(const Artifact& incumbent, const std::vector<FeedbackRecord>& history,
                     stats::RngStream&) override {
        llm::ChatRequest req;
        req.model = opt_.model;
        req.temperature = opt_.temperature;
        req.messages = {{llm::Role::user, prompt(incumbent, history)}};
        const auto text = llm::complete(chat_, req, opt_.retry);
        Artifact a{"", Domain::promptset, text, {}};
        try {
            a.payload = promptset_payload(parse_prompt_dict(last_code_block(text)), keys_);
        } catch (const ParseError& e) {
            return {a, std::string(e.what())};
        } catch (const InputError& e) {
            return {a, std::string(e.what())};
        }
        return {a, std::nullopt};
    }

private:
    llm::ChatBackend& chat_;
    std::vector<std::string> keys_;
    PromptSet initial_;
    Options opt_;
    llm::PromptTemplate template_;
};

}  // namespace fdescent::promptopt
