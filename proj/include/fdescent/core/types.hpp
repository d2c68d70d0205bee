#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdescent/error.hpp"

namespace fdescent {

enum class Domain { molecule, promptset, synthetic };
enum class Ablation { full, no_feedback, random_feedback, binary_only };
enum class HistoryPolicy { reset_on_accept, keep_all };

namespace detail {
template <class E, std::size_t N>
E parse_enum(std::string_view key, std::string_view text, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [v, name] : table) {
        if (text == name) return v;
    }
    std::string allowed;
    for (const auto& [v, name] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(std::string(key), "unknown value '" + std::string(text) + "' (expected one of " + allowed + ")");
}
template <class E, std::size_t N>
const char* enum_name(E v, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}
inline constexpr std::pair<Domain, const char*> kDomains[] = {
    {Domain::molecule, "molecule"}, {Domain::promptset, "promptset"}, {Domain::synthetic, "synthetic"}};
inline constexpr std::pair<Ablation, const char*> kAblations[] = {{Ablation::full, "full"},
                                                                  {Ablation::no_feedback, "no_feedback"},
                                                                  {Ablation::random_feedback, "random_feedback"},
                                                                  {Ablation::binary_only, "binary_only"}};
inline constexpr std::pair<HistoryPolicy, const char*> kHistory[] = {{HistoryPolicy::reset_on_accept, "reset_on_accept"},
                                                                     {HistoryPolicy::keep_all, "keep_all"}};
}  // namespace detail

inline const char* to_string(Domain d) { return detail::enum_name(d, detail::kDomains); }
inline const char* to_string(Ablation a) { return detail::enum_name(a, detail::kAblations); }
inline const char* to_string(HistoryPolicy h) { return detail::enum_name(h, detail::kHistory); }
inline Domain parse_domain(std::string_view s, std::string_view key = "domain") {
    return detail::parse_enum(key, s, detail::kDomains);
}
inline Ablation parse_ablation(std::string_view s, std::string_view key = "ablation") {
    return detail::parse_enum(key, s, detail::kAblations);
}
inline HistoryPolicy parse_history_policy(std::string_view s, std::string_view key = "history_policy") {
    return detail::parse_enum(key, s, detail::kHistory);
}

struct Artifact {
    std::string id;
    Domain domain = Domain::synthetic;
    std::string payload;
    std::map<std::string, std::string> metadata;

    void validate() const {
        if (payload.empty()) throw InputError("artifact '" + id + "' has an empty payload");
        if (id.empty()) throw InputError("artifact without id");
    }

    bool operator==(const Artifact&) const = default;
};

struct FeedbackRecord {
    std::string candidate_id;
    bool preference = false;  // true: candidate preferred over the incumbent
    std::string rationale;
    std::uint64_t iteration = 0;
    // Carried so generators can inspect rejected candidates and runs can resume.
    std::string candidate_payload;
    std::optional<double> score;

    bool operator==(const FeedbackRecord&) const = default;
};

struct RunConfig {
    std::uint64_t T = 100;
    std::uint64_t patience_k = 0;  // 0 disables early stopping
    std::uint64_t batch_size = 1;
    Ablation ablation = Ablation::full;
    double noise_q = 0.0;
    HistoryPolicy history_policy = HistoryPolicy::reset_on_accept;
    std::uint64_t seed = 0;

    void validate() const {
        if (T < 1) throw ConfigError("T", "must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
        if (!(noise_q >= 0.0 && noise_q <= 1.0)) throw ConfigError("noise_q", "must lie in [0, 1]");
    }

    bool operator==(const RunConfig&) const = default;
};

}  // namespace fdescent
