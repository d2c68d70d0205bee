#pragma once
// Molecule domain: evaluator over a memoised oracle, an LLM generator driven by
// the molecule prompt, and an offline fragment-editing generator.

#include <array>
#include <mutex>
#include <string>
#include <vector>

#include "fdescent/core/interfaces.hpp"
#include "fdescent/judge/feedback.hpp"
#include "fdescent/llm/chat.hpp"
#include "fdescent/llm/template.hpp"
#include "fdescent/mol/feedback.hpp"
#include "fdescent/mol/score.hpp"
#include "fdescent/mol/synthetic_oracle.hpp"
#include "fdescent/mol/target.hpp"

namespace fdescent::mol {

inline const std::array<std::string, 3> kSeedMolecules = {"CC(N)=O", "CCCCC", "c1ccccc1"};
inline constexpr std::size_t kDefaultTopK = 10;

// Every molecule evaluated so far, in discovery order.
class MoleculeArchive {
public:
    void add(const ScoredMolecule& m) {
        std::lock_guard lock(mu_);
        for (const auto& x : items_) {
            if (x.smiles == m.smiles) return;
        }
        items_.push_back(m);
    }
    std::vector<ScoredMolecule> snapshot() const {
        std::lock_guard lock(mu_);
        return items_;
    }

private:
    mutable std::mutex mu_;
    std::vector<ScoredMolecule> items_;
};

class MoleculeEvaluator : public Evaluator {
public:
    MoleculeEvaluator(MoleculeOracle& oracle, TargetInfo target) : memo_(oracle), target_(std::move(target)) {}

    const TargetInfo& target() const noexcept { return target_; }
    const MemoOracle& memo() const noexcept { return memo_; }
    const MoleculeArchive& archive() const noexcept { return archive_; }

    ScoredMolecule measure(const std::string& smiles) {
        auto m = mol::evaluate(smiles, memo_);
        archive_.add(m);
        return m;
    }

    std::optional<double> score(const Artifact& a) override {
        const auto m = measure(a.payload);
        if (!m.valid) return std::nullopt;
        return m.score;
    }

    // oracle_calls counts molecules not seen before by this evaluator.
    Evaluation evaluate(const Artifact& candidate, const Artifact& incumbent, stats::RngStream&) override {
        const auto before = memo_.unique_calls();
        const auto inc = measure(incumbent.payload);
        const auto cand = measure(candidate.payload);
        Evaluation ev;
        ev.oracle_calls = memo_.unique_calls() - before;
        ev.rationale = compose_feedback(cand, inc, target_);
        if (inc.valid) ev.incumbent_score = inc.score;
        if (!cand.valid) {
            ev.winner = judge::Winner::incumbent;
            return ev;
        }
        ev.candidate_score = cand.score;
        const bool better = !inc.valid || judge::score_compare(cand.score, inc.score, {}).preferred;
        ev.winner = better ? judge::Winner::candidate : judge::Winner::incumbent;
        return ev;
    }

private:
    MemoOracle memo_;
    TargetInfo target_;
    MoleculeArchive archive_;
};

// Highest-scoring seed; earlier seeds win ties.
inline std::string best_seed(MoleculeEvaluator& eval) {
    std::string best;
    double best_score = 0.0;
    for (const auto& s : kSeedMolecules) {
        const auto m = eval.measure(s);
        if (m.valid && (best.empty() || m.score > best_score)) {
            best = s;
            best_score = m.score;
        }
    }
    if (best.empty()) throw InitializationError("no seed molecule is valid under this oracle");
    return best;
}

// Feedback for each example is the rationale the loop recorded for it, so
// ablations and noise reach the prompt; scores are always shown.
inline std::vector<MoleculeExample> examples_from(const std::vector<ScoredMolecule>& archive,
                                                  const std::vector<FeedbackRecord>& history) {
    std::vector<MoleculeExample> out;
    for (const auto& m : archive) {
        MoleculeExample e{m, {}};
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (it->candidate_payload == m.smiles) {
                e.feedback = it->rationale;
                break;
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

class MoleculeLlmGenerator : public Generator {
public:
    struct Options {
        std::string model;
        std::size_t top_k = kDefaultTopK;
        double temperature = llm::kGenerationTemperature;
        llm::RetryPolicy retry;
    };

    MoleculeLlmGenerator(llm::ChatBackend& chat, MoleculeEvaluator& eval, Options opt)
        : chat_(chat), eval_(eval), opt_(std::move(opt)), template_(llm::PromptTemplate::load("molecule_system")) {
        if (opt_.top_k < 1) throw ConfigError("top_k", "must be >= 1");
    }

    Artifact initialize(const std::string&, stats::RngStream&) override {
        return {"c0", Domain::molecule, best_seed(eval_), {}};
    }

    std::string prompt(const std::vector<FeedbackRecord>& history) const {
        const auto& t = eval_.target();
        return template_.render({{"benchmark_name", t.target},
                                 {"protein_info_xml", t.protein_info_xml()},
                                 {"examples_text", examples_text(examples_from(eval_.archive().snapshot(), history),
                                                                 opt_.top_k)}});
    }

    Proposal propose(const Artifact&, const std::vector<FeedbackRecord>& history, stats::RngStream&) override {
        llm::ChatRequest req;
        req.model = opt_.model;
        req.temperature = opt_.temperature;
        req.messages = {{llm::Role::user, prompt(history)}};
        const auto text = llm::complete(chat_, req, opt_.retry);
        Artifact a{"", Domain::molecule, text, {}};
        try {
            a.payload = llm::parse_tagged(text, "smiles");
        } catch (const ParseError& e) {
            return {a, std::string(e.what())};
        }
        if (a.payload.empty()) return {a, std::string("empty <smiles> block")};
        try {
            a.metadata["reasoning"] = llm::parse_tagged(text, "reasoning");
        } catch (const ParseError&) {
        }
        return {a, std::nullopt};
    }

private:
    llm::ChatBackend& chat_;
    MoleculeEvaluator& eval_;
    Options opt_;
    llm::PromptTemplate template_;
};

// Offline generator: appends or removes fragments. It reuses the fragment of
// the most recent accepted edit when the feedback reports a positive delta.
class FragmentGenerator : public Generator {
public:
    explicit FragmentGenerator(MoleculeEvaluator& eval) : eval_(eval) {}

    static const std::vector<std::string>& fragments() {
        static const std::vector<std::string> f = {"C", "N", "O", "CC", "F", "C(=O)N", "c1ccccc1", "C1CC1", "Cl"};
        return f;
    }

    Artifact initialize(const std::string&, stats::RngStream&) override {
        return {"c0", Domain::molecule, best_seed(eval_), {}};
    }

    Proposal propose(const Artifact& incumbent, const std::vector<FeedbackRecord>& history,
                     stats::RngStream& rng) override {
        const std::string& x = incumbent.payload;
        for (auto it = history.rbegin(); it != history.rend(); ++it) {
            if (it->rationale.find("score delta: +") == std::string::npos) continue;
            for (const auto& f : fragments()) {
                if (it->candidate_payload.size() > f.size() && it->candidate_payload.ends_with(f) &&
                    well_formed_smiles(x + f)) {
                    return make(x + f, "repeat");
                }
            }
        }
        if (x.size() > 1 && rng.bernoulli(0.15)) {
            const auto y = x.substr(0, x.size() - 1);
            if (well_formed_smiles(y)) return make(y, "trim");
        }
        const auto& f = fragments()[rng.uniform_index(fragments().size())];
        return make(x + f, "append");
    }

private:
    static Proposal make(std::string smiles, const char* how) {
        return {Artifact{"", Domain::molecule, std::move(smiles), {{"strategy", how}}}, std::nullopt};
    }

    MoleculeEvaluator& eval_;
};

}  // namespace fdescent::mol
