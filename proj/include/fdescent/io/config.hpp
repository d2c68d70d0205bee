#pragma once
// Run configuration file: strict JSON, unknown keys rejected.

#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "fdescent/core/types.hpp"
#include "fdescent/io/assets.hpp"

namespace fdescent::io {

struct MoleculeSettings {
    std::string target = "ADRB1";
    std::uint64_t top_k = 10;
    std::string oracle = "synthetic";  // synthetic | bridge
    std::vector<std::string> bridge_command = {"python3", "-m", "dockstring_bridge"};

    bool operator==(const MoleculeSettings&) const = default;
};

struct SyntheticSettings {
    std::uint64_t length = 40;
    std::int64_t max_step = 4;

    bool operator==(const SyntheticSettings&) const = default;
};

struct AppConfig {
    Domain domain = Domain::synthetic;
    RunConfig run;
    std::string clock = "logical";  // logical | wall
    std::string backend = "mock";   // mock | http
    std::string model;
    std::string task = "Optimise the artifact.";
    MoleculeSettings molecule;
    SyntheticSettings synthetic;

    bool operator==(const AppConfig&) const = default;

    void validate() const {
        run.validate();
        if (clock != "logical" && clock != "wall") throw ConfigError("clock", "must be \"logical\" or \"wall\"");
        if (backend != "mock" && backend != "http") throw ConfigError("backend", "must be \"mock\" or \"http\"");
        if (molecule.top_k < 1) throw ConfigError("molecule.top_k", "must be >= 1");
        if (molecule.oracle != "synthetic" && molecule.oracle != "bridge") {
            throw ConfigError("molecule.oracle", "must be \"synthetic\" or \"bridge\"");
        }
        if (molecule.oracle == "bridge" && molecule.bridge_command.empty()) {
            throw ConfigError("molecule.bridge_command", "must not be empty");
        }
        if (synthetic.length < 1) throw ConfigError("synthetic.length", "must be >= 1");
        if (synthetic.max_step < 1 || synthetic.max_step > 25) throw ConfigError("synthetic.max_step", "must lie in [1, 25]");
    }
};

// Domain defaults before the file's values are applied.
inline AppConfig defaults_for(Domain d) {
    AppConfig c;
    c.domain = d;
    if (d == Domain::molecule) {
        c.run.T = 1000;
        c.run.batch_size = 8;
        c.task = "Propose a small molecule that binds the target strongly and is drug-like.";
    }
    return c;
}

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.contains(it.key())) throw ConfigError(prefix + it.key(), "unknown key");
    }
}

template <class T>
void read(const json& j, const char* key, const std::string& prefix, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const std::string name = prefix + key;
    if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(name, "expected a string");
        out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(name, "expected a number");
        out = v.get<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError(name, "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
        if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
        out = v.get<std::int64_t>();
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!v.is_array()) throw ConfigError(name, "expected an array of strings");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_string()) throw ConfigError(name, "expected an array of strings");
            out.push_back(x.get<std::string>());
        }
    }
}

}  // namespace detail

inline AppConfig config_from_json(const nlohmann::json& j) {
    using detail::read;
    detail::check_keys(j, "", {"domain", "T", "patience_k", "batch_size", "ablation", "noise_q", "history_policy",
                               "seed", "clock", "backend", "model", "task", "molecule", "synthetic"});
    std::string domain = "synthetic";
    read(j, "domain", "", domain);
    AppConfig c = defaults_for(parse_domain(domain));
    read(j, "T", "", c.run.T);
    read(j, "patience_k", "", c.run.patience_k);
    read(j, "batch_size", "", c.run.batch_size);
    std::string s = to_string(c.run.ablation);
    read(j, "ablation", "", s);
    c.run.ablation = parse_ablation(s);
    read(j, "noise_q", "", c.run.noise_q);
    s = to_string(c.run.history_policy);
    read(j, "history_policy", "", s);
    c.run.history_policy = parse_history_policy(s);
    read(j, "seed", "", c.run.seed);
    read(j, "clock", "", c.clock);
    read(j, "backend", "", c.backend);
    read(j, "model", "", c.model);
    read(j, "task", "", c.task);
    if (j.contains("molecule")) {
        const auto& m = j["molecule"];
        detail::check_keys(m, "molecule.", {"target", "top_k", "oracle", "bridge_command"});
        read(m, "target", "molecule.", c.molecule.target);
        read(m, "top_k", "molecule.", c.molecule.top_k);
        read(m, "oracle", "molecule.", c.molecule.oracle);
        read(m, "bridge_command", "molecule.", c.molecule.bridge_command);
    }
    if (j.contains("synthetic")) {
        const auto& m = j["synthetic"];
        detail::check_keys(m, "synthetic.", {"length", "max_step"});
        read(m, "length", "synthetic.", c.synthetic.length);
        read(m, "max_step", "synthetic.", c.synthetic.max_step);
    }
    c.validate();
    return c;
}

inline nlohmann::ordered_json to_json(const AppConfig& c) {
    return {{"domain", to_string(c.domain)},
            {"T", c.run.T},
            {"patience_k", c.run.patience_k},
            {"batch_size", c.run.batch_size},
            {"ablation", to_string(c.run.ablation)},
            {"noise_q", c.run.noise_q},
            {"history_policy", to_string(c.run.history_policy)},
            {"seed", c.run.seed},
            {"clock", c.clock},
            {"backend", c.backend},
            {"model", c.model},
            {"task", c.task},
            {"molecule",
             {{"target", c.molecule.target},
              {"top_k", c.molecule.top_k},
              {"oracle", c.molecule.oracle},
              {"bridge_command", c.molecule.bridge_command}}},
            {"synthetic", {{"length", c.synthetic.length}, {"max_step", c.synthetic.max_step}}}};
}

inline AppConfig parse_config(std::string_view text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("<root>", "config is not valid JSON");
    return config_from_json(j);
}

inline AppConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

inline void write_config(const std::filesystem::path& path, const AppConfig& c) {
    write_file(path, to_json(c).dump(2) + "\n");
}

}  // namespace fdescent::io
