#pragma once
// Scalar-score adapter, rationale corruption and ablation transforms.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fdescent/core/types.hpp"
#include "fdescent/stats/rng.hpp"
#include "fdescent/util/log.hpp"

namespace fdescent::judge {

struct Preference {
    bool preferred = false;
    std::string rationale;
};

// Strict improvement: equal scores keep the incumbent.
inline Preference score_compare(double candidate_score, double incumbent_score, std::string feedback) {
    if (!std::isfinite(candidate_score) || !std::isfinite(incumbent_score)) {
        throw EvaluationError("score_compare: scores must be finite");
    }
    return {candidate_score > incumbent_score, std::move(feedback)};
}

struct NoisePolicy {
    double q = 0.0;
    std::vector<std::string> pool;
    stats::RngStream rng;
};

// Each record's rationale is independently replaced with probability q by a
// donor drawn uniformly from the pool, skipping donors equal to its own text.
// One uniform draw is consumed per record whatever q is.
inline std::vector<FeedbackRecord> corrupt_feedback(std::vector<FeedbackRecord> records, NoisePolicy& policy) {
    if (!(policy.q >= 0.0 && policy.q <= 1.0)) throw ConfigError("noise_q", "must lie in [0, 1]");
    if (policy.q > 0.0 && policy.pool.size() < 2) {
        throw ConfigError("noise_q", "rationale pool needs at least two entries when q > 0");
    }
    std::vector<const std::string*> donors;
    for (auto& r : records) {
        if (!policy.rng.bernoulli(policy.q)) continue;
        donors.clear();
        for (const auto& p : policy.pool) {
            if (p != r.rationale) donors.push_back(&p);
        }
        if (donors.empty()) {
            log::warn("corrupt_feedback: no donor differs from record " + r.candidate_id + "; left unchanged");
            continue;
        }
        r.rationale = *donors[policy.rng.uniform_index(donors.size())];
    }
    return records;
}

inline const std::string kBinaryBetter = "candidate was better";
inline const std::string kBinaryWorse = "candidate was worse";

// nullopt means the record is suppressed (no_feedback). random_feedback
// requires a noise policy and routes through corrupt_feedback with q = 1.
inline std::optional<FeedbackRecord> apply_ablation(Ablation mode, FeedbackRecord record,
                                                    NoisePolicy* random_source = nullptr) {
    switch (mode) {
        case Ablation::full: return record;
        case Ablation::no_feedback: return std::nullopt;
        case Ablation::binary_only:
            record.rationale = record.preference ? kBinaryBetter : kBinaryWorse;
            return record;
        case Ablation::random_feedback: {
            if (!random_source) throw ConfigError("ablation", "random_feedback needs a rationale pool");
            NoisePolicy all{1.0, random_source->pool, random_source->rng};
            auto out = corrupt_feedback({std::move(record)}, all);
            random_source->rng = all.rng;
            return out.front();
        }
    }
    return record;
}

}  // namespace fdescent::judge
