#pragma once
// Run directories: config.json, manifest.json, trajectory.jsonl, summary.json
// and exports/*.csv. One writer per directory.

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "fdescent/core/loop.hpp"
#include "fdescent/core/trajectory.hpp"
#include "fdescent/io/config.hpp"
#include "fdescent/llm/http_backend.hpp"
#include "fdescent/mol/bridge.hpp"
#include "fdescent/mol/domain.hpp"
#include "fdescent/synthetic/domain.hpp"

#ifndef FDESCENT_GIT_DESCRIBE
#define FDESCENT_GIT_DESCRIBE "unknown"
#endif

namespace fdescent::io {

namespace fs = std::filesystem;

// Generator, evaluator and whatever they borrow, built from a config.
struct Session {
    std::unique_ptr<llm::ChatBackend> chat;
    std::unique_ptr<mol::MoleculeOracle> oracle;
    std::unique_ptr<mol::MoleculeOracle> fallback;
    std::unique_ptr<mol::BridgeClient> bridge;
    std::unique_ptr<Evaluator> evaluator;
    std::unique_ptr<Generator> generator;
    mol::MoleculeEvaluator* molecules = nullptr;

    // Re-measures molecules from an earlier segment so memo accounting and
    // the example archive continue where they stopped.
    void warm(const std::vector<TrajectoryEntry>& lines) {
        if (!molecules) return;
        for (const auto& e : lines) {
            for (const auto& c : e.batch) {
                if (!c.format_error && c.winner != judge::Winner::inconclusive) molecules->measure(c.payload);
            }
        }
    }
};

inline Session make_session(const AppConfig& cfg) {
    cfg.validate();
    Session s;
    switch (cfg.domain) {
        case Domain::synthetic: {
            if (cfg.backend != "mock") throw ConfigError("backend", "the synthetic domain runs with the mock backend only");
            auto task = synthetic::Task::from_seed(cfg.run.seed, cfg.synthetic.length);
            s.evaluator = std::make_unique<synthetic::ExactJudge>(std::move(task));
            s.generator = std::make_unique<synthetic::HintFollowingGenerator>(cfg.synthetic.length,
                                                                               static_cast<int>(cfg.synthetic.max_step));
            break;
        }
        case Domain::molecule: {
            const auto target = mol::TargetInfo::load(cfg.molecule.target);
            if (cfg.molecule.oracle == "bridge") {
                s.bridge = std::make_unique<mol::BridgeClient>(
                    std::make_unique<mol::SubprocessTransport>(cfg.molecule.bridge_command));
                s.fallback = std::make_unique<mol::SyntheticOracle>(cfg.molecule.target);
                s.oracle = std::make_unique<mol::BridgeOracle>(*s.bridge, cfg.molecule.target, s.fallback.get());
            } else {
                s.oracle = std::make_unique<mol::SyntheticOracle>(cfg.molecule.target);
            }
            auto ev = std::make_unique<mol::MoleculeEvaluator>(*s.oracle, target);
            s.molecules = ev.get();
            if (cfg.backend == "http") {
                auto ep = llm::Endpoint::from_env();
                if (!cfg.model.empty()) ep.model = cfg.model;
                s.chat = std::make_unique<llm::HttpChatBackend>(ep);
                mol::MoleculeLlmGenerator::Options opt;
                opt.model = ep.model;
                opt.top_k = cfg.molecule.top_k;
                s.generator = std::make_unique<mol::MoleculeLlmGenerator>(*s.chat, *ev, opt);
            } else {
                s.generator = std::make_unique<mol::FragmentGenerator>(*ev);
            }
            s.evaluator = std::move(ev);
            break;
        }
        case Domain::promptset:
            throw ConfigError("domain", "promptset runs need an example-outcome provider; use the library API");
    }
    return s;
}

inline Clock clock_for(const AppConfig& cfg) { return cfg.clock == "wall" ? wall_clock() : logical_clock(); }

enum class RunStatus { running, complete, incomplete };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::running: return "running";
        case RunStatus::complete: return "complete";
        case RunStatus::incomplete: return "incomplete";
    }
    return "?";
}

struct RunManifest {
    std::string run_id;
    nlohmann::ordered_json config;
    std::string domain;
    std::string started;
    std::string ended;
    std::string git_describe = FDESCENT_GIT_DESCRIBE;
    RunStatus status = RunStatus::running;
    std::uint64_t segments = 1;  // 1 + number of resumes

    nlohmann::ordered_json to_json() const {
        return {{"run_id", run_id},   {"domain", domain}, {"started", started},         {"ended", ended},
                {"git_describe", git_describe}, {"status", io::to_string(status)}, {"segments", segments},
                {"config", config}};
    }

    static RunManifest from_json(const nlohmann::ordered_json& j) {
        RunManifest m;
        try {
            m.run_id = j.at("run_id").get<std::string>();
            m.config = j.at("config");
            m.domain = j.at("domain").get<std::string>();
            m.started = j.at("started").get<std::string>();
            m.ended = j.at("ended").get<std::string>();
            m.git_describe = j.at("git_describe").get<std::string>();
            m.segments = j.at("segments").get<std::uint64_t>();
            const auto st = j.at("status").get<std::string>();
            if (st == "running") m.status = RunStatus::running;
            else if (st == "complete") m.status = RunStatus::complete;
            else if (st == "incomplete") m.status = RunStatus::incomplete;
            else throw InputError("manifest: unknown status '" + st + "'");
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("manifest: ") + e.what());
        }
        return m;
    }
};

struct RunPaths {
    fs::path dir;
    fs::path config() const { return dir / "config.json"; }
    fs::path manifest() const { return dir / "manifest.json"; }
    fs::path trajectory() const { return dir / "trajectory.jsonl"; }
    fs::path summary() const { return dir / "summary.json"; }
    fs::path exports() const { return dir / "exports"; }
};

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_number(const std::optional<double>& v) { return v ? util::shortest(*v) : ""; }

inline std::string trajectory_csv(const std::vector<TrajectoryEntry>& lines) {
    std::string s = "t,candidate_id,accepted,score,incumbent_id,incumbent_score,oracle_calls,streak\n";
    for (const auto& e : lines) {
        s += std::to_string(e.t) + "," + csv_field(e.candidate_id) + "," + (e.accepted ? "1" : "0") + "," +
             csv_number(e.score) + "," + csv_field(e.incumbent_id) + "," + csv_number(e.incumbent_score) + "," +
             std::to_string(e.oracle_calls) + "," + std::to_string(e.streak) + "\n";
    }
    return s;
}

inline std::string molecules_csv(const std::vector<mol::ScoredMolecule>& ms) {
    std::string s = "smiles,valid,vina,qed,score\n";
    for (const auto& m : ms) {
        s += csv_field(m.smiles) + "," + (m.valid ? "1" : "0") + "," + (m.valid ? util::shortest(m.vina) : "") + "," +
             (m.valid ? util::shortest(m.qed) : "") + "," + (m.valid ? util::shortest(m.score) : "") + "\n";
    }
    return s;
}

inline std::vector<TrajectoryEntry> read_trajectory(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot open " + p.string());
    return read_jsonl(in);
}

inline void write_summary(const RunPaths& paths, const RunResult& res, const std::vector<TrajectoryEntry>& all) {
    std::uint64_t accepted = 0;
    for (const auto& e : all) accepted += (e.t > 0 && e.accepted) ? 1 : 0;
    nlohmann::ordered_json j{{"status", res.complete ? "complete" : "incomplete"},
                             {"stop_reason", to_string(res.stop)},
                             {"iterations", res.state.t},
                             {"accepted", accepted},
                             {"oracle_calls", res.state.oracle_calls},
                             {"discarded", res.state.discarded},
                             {"incumbent",
                              {{"id", res.state.incumbent.id},
                               {"payload", res.state.incumbent.payload},
                               {"score", fdescent::detail::opt_number(res.state.incumbent_score)}}}};
    if (!res.complete) j["error"] = res.error;
    write_file(paths.summary(), j.dump(2) + "\n");
}

inline void write_exports(const RunPaths& paths, const Session& session, const std::vector<TrajectoryEntry>& all) {
    fs::create_directories(paths.exports());
    write_file(paths.exports() / "trajectory.csv", trajectory_csv(all));
    if (session.molecules) {
        write_file(paths.exports() / "molecules.csv", molecules_csv(session.molecules->archive().snapshot()));
    }
}

struct RunOutcome {
    RunResult result;
    bool noop = false;
};

namespace detail {

inline RunOutcome finish(const RunPaths& paths, RunManifest manifest, Session& session, RunResult res,
                         const Clock& clock) {
    const auto all = read_trajectory(paths.trajectory());
    write_summary(paths, res, all);
    write_exports(paths, session, all);
    manifest.status = res.complete ? RunStatus::complete : RunStatus::incomplete;
    manifest.ended = clock(res.state.t);
    write_file(paths.manifest(), manifest.to_json().dump(2) + "\n");
    return {std::move(res), false};
}

inline EntrySink appender(std::ofstream& out) {
    return [&out](const TrajectoryEntry& e) {
        out << to_jsonl_line(e);
        out.flush();
    };
}

}  // namespace detail

// Fails when `dir` already holds a run.
inline RunOutcome optimize(const AppConfig& cfg, const fs::path& dir) {
    cfg.validate();
    RunPaths paths{dir};
    if (fs::exists(paths.config()) || fs::exists(paths.trajectory())) {
        throw InputError("run directory " + dir.string() + " already contains a run; use resume");
    }
    Session session = make_session(cfg);
    fs::create_directories(dir);
    write_config(paths.config(), cfg);
    const Clock clock = clock_for(cfg);
    RunManifest manifest;
    manifest.run_id = dir.filename().string();
    manifest.config = to_json(cfg);
    manifest.domain = to_string(cfg.domain);
    manifest.started = clock(0);
    write_file(paths.manifest(), manifest.to_json().dump(2) + "\n");

    std::ofstream out(paths.trajectory(), std::ios::app);
    RunResult res;
    try {
        res = run(cfg.run, cfg.domain, *session.generator, *session.evaluator, cfg.task, clock, detail::appender(out));
    } catch (const InitializationError& e) {
        res.complete = false;
        res.stop = StopReason::backend_failure;
        res.error = e.what();
    }
    out.close();
    if (!res.complete && res.state.incumbent.id.empty()) {
        manifest.status = RunStatus::incomplete;
        manifest.ended = clock(0);
        write_file(paths.manifest(), manifest.to_json().dump(2) + "\n");
        return {std::move(res), false};
    }
    return detail::finish(paths, std::move(manifest), session, std::move(res), clock);
}

// Continues an incomplete run. A complete run is left untouched.
inline RunOutcome resume(const fs::path& dir) {
    RunPaths paths{dir};
    const auto cfg = load_config(paths.config());
    const auto mj = nlohmann::ordered_json::parse(read_file(paths.manifest()), nullptr, false);
    if (mj.is_discarded()) throw InputError("manifest.json is not JSON");
    auto manifest = RunManifest::from_json(mj);
    if (manifest.status == RunStatus::complete) {
        RunOutcome o;
        o.noop = true;
        return o;
    }
    Session session = make_session(cfg);
    const Clock clock = clock_for(cfg);
    auto lines = fs::exists(paths.trajectory()) ? read_trajectory(paths.trajectory()) : std::vector<TrajectoryEntry>{};
    manifest.status = RunStatus::running;
    ++manifest.segments;
    write_file(paths.manifest(), manifest.to_json().dump(2) + "\n");

    std::ofstream out(paths.trajectory(), std::ios::app);
    RunResult res;
    try {
        if (lines.empty()) {
            res = run(cfg.run, cfg.domain, *session.generator, *session.evaluator, cfg.task, clock,
                      detail::appender(out));
        } else {
            session.warm(lines);
            auto state = state_from_trajectory(cfg.run, cfg.domain, lines);
            res = run(cfg.run, std::move(state), *session.generator, *session.evaluator, clock, detail::appender(out));
        }
    } catch (const InitializationError& e) {
        res.complete = false;
        res.stop = StopReason::backend_failure;
        res.error = e.what();
    }
    out.close();
    return detail::finish(paths, std::move(manifest), session, std::move(res), clock);
}

}  // namespace fdescent::io
