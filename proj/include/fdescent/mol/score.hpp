#pragma once
// Combined molecule objective and oracle plumbing.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>

#include "fdescent/error.hpp"

namespace fdescent::mol {

// s = -vina - 10 (1 - qed); larger is better.
inline double combined_score(double vina, double qed) {
    if (!std::isfinite(vina)) throw DomainError("combined_score: vina must be finite");
    if (!(qed >= 0.0 && qed <= 1.0)) throw DomainError("combined_score: qed must lie in [0, 1]");
    return -vina - 10.0 * (1.0 - qed);
}

struct OracleResult {
    bool valid = false;
    std::string reason;  // set when invalid
    double vina = 0.0;
    double qed = 0.0;
    std::map<std::string, std::string> descriptors;
};

// Ground-truth scorer. Transport failures throw TransientError.
class MoleculeOracle {
public:
    virtual ~MoleculeOracle() = default;
    virtual OracleResult query(const std::string& smiles) = 0;
};

struct ScoredMolecule {
    std::string smiles;
    double vina = 0.0;
    double qed = 0.0;
    double score = 0.0;  // meaningful only when valid
    bool valid = false;
    std::string reason;
    std::map<std::string, std::string> descriptors;
};

inline ScoredMolecule evaluate(const std::string& smiles, MoleculeOracle& oracle) {
    const auto r = oracle.query(smiles);
    ScoredMolecule m;
    m.smiles = smiles;
    m.valid = r.valid;
    m.descriptors = r.descriptors;
    if (!r.valid) {
        m.reason = r.reason.empty() ? "invalid SMILES" : r.reason;
        m.score = std::nan("");
        return m;
    }
    m.vina = r.vina;
    m.qed = r.qed;
    m.score = combined_score(r.vina, r.qed);
    return m;
}

// Caches results by SMILES text. Concurrent lookups are safe; if two threads
// miss on the same key, the first result stored wins.
class MemoOracle : public MoleculeOracle {
public:
    explicit MemoOracle(MoleculeOracle& inner) : inner_(inner) {}

    OracleResult query(const std::string& smiles) override {
        {
            std::lock_guard lock(mu_);
            ++raw_;
            if (auto it = cache_.find(smiles); it != cache_.end()) return it->second;
        }
        OracleResult r = inner_.query(smiles);
        std::lock_guard lock(mu_);
        auto [it, inserted] = cache_.emplace(smiles, std::move(r));
        if (inserted) ++unique_;
        return it->second;
    }

    std::uint64_t raw_calls() const {
        std::lock_guard lock(mu_);
        return raw_;
    }
    std::uint64_t unique_calls() const {
        std::lock_guard lock(mu_);
        return unique_;
    }
    bool contains(const std::string& smiles) const {
        std::lock_guard lock(mu_);
        return cache_.contains(smiles);
    }

private:
    MoleculeOracle& inner_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, OracleResult> cache_;
    std::uint64_t raw_ = 0;
    std::uint64_t unique_ = 0;
};

}  // namespace fdescent::mol
