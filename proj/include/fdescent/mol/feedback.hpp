#pragma once
// Feedback text, top-k example selection and Pareto analysis.

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "fdescent/mol/score.hpp"
#include "fdescent/mol/target.hpp"
#include "fdescent/util/text.hpp"

namespace fdescent::mol {

namespace detail {
inline std::optional<double> descriptor_number(const ScoredMolecule& m, const char* key) {
    const auto it = m.descriptors.find(key);
    if (it == m.descriptors.end()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str()) return std::nullopt;
    return v;
}
}  // namespace detail

// Rule-of-five style warnings, using whichever descriptors are present.
inline std::vector<std::string> drug_likeness_flags(const ScoredMolecule& m) {
    std::vector<std::string> flags;
    if (m.qed < 0.5) flags.push_back("low QED " + util::fixed(m.qed, 3) + " < 0.500");
    if (auto v = detail::descriptor_number(m, "HeavyAtomCount"); v && *v > 35) {
        flags.push_back("heavy atom count " + util::shortest(*v) + " > 35");
    }
    if (auto v = detail::descriptor_number(m, "LogP"); v && *v > 5) flags.push_back("LogP " + util::fixed(*v, 2) + " > 5");
    if (auto v = detail::descriptor_number(m, "HBondDonorCount"); v && *v > 5) {
        flags.push_back("H-bond donors " + util::shortest(*v) + " > 5");
    }
    if (auto v = detail::descriptor_number(m, "HBondAcceptorCount"); v && *v > 10) {
        flags.push_back("H-bond acceptors " + util::shortest(*v) + " > 10");
    }
    return flags;
}

inline std::string compose_feedback(const ScoredMolecule& candidate, const ScoredMolecule& incumbent,
                                    const TargetInfo& target) {
    std::string s = "target: " + target.target + " (" + target.accession + ")\n";
    s += "smiles: " + candidate.smiles + "\n";
    if (!candidate.valid) {
        s += "valid: 'False'\n";
        s += "reason: " + candidate.reason + "\n";
        return s;
    }
    s += "valid: 'True'\n";
    s += "score: '" + util::shortest(candidate.score) + "'\n";
    s += "score delta: " + (incumbent.valid ? util::signed_fixed(candidate.score - incumbent.score, 3) : "n/a") + "\n";
    s += "vina: '" + util::shortest(candidate.vina) + "'\n";
    s += "qed: '" + util::shortest(candidate.qed) + "'\n";
    s += "metadata:\n";
    for (const auto& [k, v] : candidate.descriptors) s += "  " + k + ": '" + v + "'\n";
    const auto flags = drug_likeness_flags(candidate);
    s += "drug-likeness flags: ";
    if (flags.empty()) {
        s += "none\n";
    } else {
        for (std::size_t i = 0; i < flags.size(); ++i) s += (i ? "; " : "") + flags[i];
        s += "\n";
    }
    return s;
}

// The k best valid molecules, descending by score; earlier entries win ties.
inline std::vector<ScoredMolecule> select_topk(const std::vector<ScoredMolecule>& history, std::size_t k) {
    if (k < 1) throw ConfigError("top_k", "must be >= 1");
    std::vector<ScoredMolecule> valid;
    for (const auto& m : history) {
        if (m.valid) valid.push_back(m);
    }
    std::stable_sort(valid.begin(), valid.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    if (valid.size() > k) valid.resize(k);
    return valid;
}

struct ParetoPoint {
    double affinity = 0.0;  // -vina
    double qed = 0.0;
};

// Indices (ascending) of points that no other point weakly dominates with
// a strict gain in at least one coordinate. Duplicates are all kept.
inline std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& pts) {
    for (const auto& p : pts) {
        if (!std::isfinite(p.affinity) || !std::isfinite(p.qed)) throw DomainError("pareto_front: non-finite point");
    }
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a].affinity != pts[b].affinity) return pts[a].affinity > pts[b].affinity;
        return pts[a].qed > pts[b].qed;
    });
    std::vector<std::size_t> front;
    double best_prev = -std::numeric_limits<double>::infinity();  // max qed at strictly higher affinity
    for (std::size_t g = 0; g < order.size();) {
        std::size_t e = g;
        while (e < order.size() && pts[order[e]].affinity == pts[order[g]].affinity) ++e;
        const double group_max = pts[order[g]].qed;
        for (std::size_t i = g; i < e; ++i) {
            const double q = pts[order[i]].qed;
            if (q == group_max && q > best_prev) front.push_back(order[i]);
        }
        best_prev = std::max(best_prev, group_max);
        g = e;
    }
    std::sort(front.begin(), front.end());
    return front;
}

struct MoleculeExample {
    ScoredMolecule molecule;
    std::string feedback;
};

// Body for {examples_text}: best first, as the prompt promises.
inline std::string examples_text(std::vector<MoleculeExample> examples, std::size_t k) {
    std::vector<ScoredMolecule> ms;
    for (const auto& e : examples) ms.push_back(e.molecule);
    const auto top = select_topk(ms, k);
    if (top.empty()) return "No molecules have been evaluated yet, so there is no prior feedback.";
    std::string s;
    for (std::size_t i = 0; i < top.size(); ++i) {
        s += std::to_string(i + 1) + ". <smiles>" + top[i].smiles + "</smiles> score: " + util::fixed(top[i].score, 3) +
             " (vina " + util::fixed(top[i].vina, 2) + ", QED " + util::fixed(top[i].qed, 3) + ")\n";
        for (const auto& e : examples) {
            if (e.molecule.smiles == top[i].smiles && !e.feedback.empty()) {
                s += "   feedback: " + std::string(util::trim(e.feedback)) + "\n";
                break;
            }
        }
    }
    return s;
}

}  // namespace fdescent::mol
