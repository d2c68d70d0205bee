#pragma once

#include <array>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fdescent/error.hpp"
#include "fdescent/io/assets.hpp"

namespace fdescent::mol {

inline constexpr std::array<std::string_view, 6> kTargets = {"ADRB1", "PGR", "PPARA", "PPARG", "CDK2", "F2"};

inline bool known_target(std::string_view name) {
    for (auto t : kTargets) {
        if (t == name) return true;
    }
    return false;
}

struct TargetInfo {
    std::string target;
    std::string accession;
    nlohmann::ordered_json regions = nlohmann::ordered_json::object();
    nlohmann::ordered_json critical_residues = nlohmann::ordered_json::object();

    static TargetInfo from_json(const nlohmann::ordered_json& j) {
        TargetInfo t;
        try {
            t.target = j.at("target").get<std::string>();
            t.accession = j.at("accession").get<std::string>();
            if (j.contains("regions")) t.regions = j.at("regions");
            if (j.contains("critical_residues")) t.critical_residues = j.at("critical_residues");
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("target info: ") + e.what());
        }
        if (!known_target(t.target)) throw ConfigError("target", "unknown protein target '" + t.target + "'");
        return t;
    }

    static TargetInfo load(std::string_view name) {
        if (!known_target(name)) throw ConfigError("target", "unknown protein target '" + std::string(name) + "'");
        const auto text = io::read_file(io::asset_dir() / "targets" / (std::string(name) + ".json"));
        const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
        if (j.is_discarded()) throw InputError("target info for " + std::string(name) + " is not JSON");
        return from_json(j);
    }

    nlohmann::ordered_json to_json() const {
        return {{"target", target}, {"accession", accession}, {"regions", regions}, {"critical_residues", critical_residues}};
    }

    // Block substituted for {protein_info_xml} in the molecule prompt.
    std::string protein_info_xml() const { return "<protein_info>\n" + to_json().dump(2) + "\n</protein_info>"; }
};

}  // namespace fdescent::mol
