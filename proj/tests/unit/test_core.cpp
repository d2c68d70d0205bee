#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdescent/core/chat_generator.hpp"
#include "fdescent/core/loop.hpp"
#include "fdescent/core/trajectory.hpp"
#include "fdescent/io/assets.hpp"
#include "fdescent/llm/scripted.hpp"
#include "fdescent/synthetic/domain.hpp"

using namespace fdescent;
using judge::Winner;

namespace {

// Proposes "p1", "p2", ... ; optional failure on a given call.
class CountingGenerator : public Generator {
public:
    Artifact initialize(const std::string&, stats::RngStream&) override { return {"c0", Domain::synthetic, "p0", {}}; }
    Proposal propose(const Artifact&, const std::vector<FeedbackRecord>& history, stats::RngStream&) override {
        seen_history.push_back(history.size());
        ++calls;
        if (calls == fail_on) throw BackendError("generator down");
        if (calls == malformed_on) return {Artifact{"", Domain::synthetic, "garbage", {}}, std::string("no tag")};
        return {Artifact{"", Domain::synthetic, "p" + std::to_string(calls), {}}, std::nullopt};
    }
    int calls = 0;
    int fail_on = -1;
    int malformed_on = -1;
    std::vector<std::size_t> seen_history;
};

class ScriptedEvaluator : public Evaluator {
public:
    ScriptedEvaluator& then(Winner w, std::string r, std::uint64_t calls = 1, std::optional<double> score = {}) {
        q.push_back({w, std::move(r), calls, score, std::nullopt});
        return *this;
    }
    Evaluation evaluate(const Artifact&, const Artifact&, stats::RngStream&) override {
        ++invocations;
        if (q.empty()) {
            if (fallback) return *fallback;
            throw BackendError("evaluator script exhausted");
        }
        auto e = q.front();
        q.pop_front();
        return e;
    }
    std::deque<Evaluation> q;
    std::optional<Evaluation> fallback;
    int invocations = 0;
};

RunState start(const RunConfig& cfg, std::string payload = "p0") {
    return initial_state(cfg, Artifact{"c0", Domain::synthetic, std::move(payload), {}}, std::nullopt);
}

std::string jsonl(const std::vector<TrajectoryEntry>& es) {
    std::string s;
    for (const auto& e : es) s += to_jsonl_line(e);
    return s;
}

}  // namespace

TEST(InitArtifact, ScriptedGeneratorPayload) {
    llm::ScriptedBackend chat({"aaaa"});
    ChatGenerator gen(chat, "task", ChatGenerator::Options{"", 0.6, "", llm::RetryPolicy::immediate()});
    stats::RngStream rng(1);
    const auto a = init_artifact(Domain::synthetic, gen, "write four letters", rng);
    EXPECT_EQ(a.payload, "aaaa");
    EXPECT_EQ(a.id, "c0");
    EXPECT_EQ(chat.calls().at(0).messages.at(0).content, "write four letters");
}

TEST(InitArtifact, BoundedRetriesThenInitializationError) {
    llm::ScriptedBackend chat;
    for (int i = 0; i < 9; ++i) chat.fail(llm::ScriptedBackend::Kind::transient);
    ChatGenerator gen(chat, "task", ChatGenerator::Options{"", 0.6, "", llm::RetryPolicy::immediate()});
    stats::RngStream rng(1);
    EXPECT_THROW(init_artifact(Domain::synthetic, gen, "t", rng), InitializationError);
    EXPECT_EQ(chat.call_count(), 9u);  // 3 init attempts x 3 transport attempts
    EXPECT_THROW(init_artifact(Domain::synthetic, gen, "", rng), InputError);
}

TEST(Step, AcceptanceReplacesIncumbentAndResetsHistory) {
    RunConfig cfg;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::incumbent, "worse horn").then(Winner::candidate, "good");
    auto s = step(start(cfg), cfg, gen, ev).state;
    ASSERT_EQ(s.history.size(), 1u);
    EXPECT_EQ(s.history[0].rationale, "worse horn");
    EXPECT_FALSE(s.history[0].preference);
    EXPECT_EQ(s.incumbent.payload, "p0");
    EXPECT_EQ(s.streak, 1u);
    auto r = step(s, cfg, gen, ev);
    EXPECT_EQ(r.state.incumbent.payload, "p2");
    EXPECT_EQ(r.state.incumbent.id, "c2");
    EXPECT_TRUE(r.state.history.empty());
    EXPECT_EQ(r.state.streak, 0u);
    EXPECT_EQ(r.entry.rationale, "good");  // recorded before the reset
    EXPECT_EQ(gen.seen_history, (std::vector<std::size_t>{0, 1}));
}

TEST(Step, KeepAllRetainsAcceptedRecords) {
    RunConfig cfg;
    cfg.history_policy = HistoryPolicy::keep_all;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::incumbent, "a").then(Winner::candidate, "b");
    auto s = step(step(start(cfg), cfg, gen, ev).state, cfg, gen, ev).state;
    ASSERT_EQ(s.history.size(), 2u);
    EXPECT_TRUE(s.history[1].preference);
    EXPECT_EQ(s.history[1].iteration, 2u);
}

TEST(Step, InconclusiveConsumesIterationWithoutRecord) {
    RunConfig cfg;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::inconclusive, "", 6);
    const auto r = step(start(cfg), cfg, gen, ev);
    EXPECT_EQ(r.state.t, 1u);
    EXPECT_EQ(r.state.streak, 1u);
    EXPECT_TRUE(r.state.history.empty());
    EXPECT_EQ(r.state.oracle_calls, 6u);
    EXPECT_EQ(r.state.discarded, 1u);
    EXPECT_FALSE(r.entry.batch[0].recorded_rationale);
}

TEST(Step, GeneratorFailureLeavesStateUnchanged) {
    RunConfig cfg;
    CountingGenerator gen;
    gen.fail_on = 1;
    ScriptedEvaluator ev;
    const auto s0 = start(cfg);
    const auto copy = s0;
    EXPECT_THROW(step(s0, cfg, gen, ev), BackendError);
    EXPECT_EQ(s0, copy);
    EXPECT_EQ(ev.invocations, 0);
}

TEST(Step, MalformedGenerationIsRejectedWithoutEvaluator) {
    RunConfig cfg;
    CountingGenerator gen;
    gen.malformed_on = 1;
    ScriptedEvaluator ev;
    const auto r = step(start(cfg), cfg, gen, ev);
    EXPECT_EQ(ev.invocations, 0);
    ASSERT_EQ(r.state.history.size(), 1u);
    EXPECT_EQ(r.state.history[0].rationale, kFormatFailure);
    EXPECT_TRUE(r.entry.batch[0].format_error);
    EXPECT_TRUE(r.state.rationale_pool.empty());
}

TEST(Step, BatchPicksBestScoredAcceptance) {
    RunConfig cfg;
    cfg.batch_size = 3;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::candidate, "r1", 1, 5.0).then(Winner::candidate, "r2", 1, 7.0).then(Winner::incumbent, "r3", 1, 1.0);
    const auto r = step(start(cfg), cfg, gen, ev);
    EXPECT_EQ(r.state.incumbent.payload, "p2");
    EXPECT_EQ(r.state.incumbent.id, "c1-1");
    EXPECT_EQ(r.state.incumbent_score, 7.0);
    EXPECT_EQ(r.state.oracle_calls, 3u);
    EXPECT_EQ(r.entry.batch.size(), 3u);
}

TEST(Step, BatchWithoutScoresTakesFirstAcceptance) {
    RunConfig cfg;
    cfg.batch_size = 3;
    cfg.history_policy = HistoryPolicy::keep_all;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::incumbent, "r1").then(Winner::candidate, "r2").then(Winner::candidate, "r3");
    const auto r = step(start(cfg), cfg, gen, ev);
    EXPECT_EQ(r.state.incumbent.payload, "p2");
    EXPECT_EQ(r.state.history.size(), 3u);
}

TEST(Step, AblationsShapeRecordedRationales) {
    for (auto mode : {Ablation::binary_only, Ablation::no_feedback}) {
        RunConfig cfg;
        cfg.ablation = mode;
        CountingGenerator gen;
        ScriptedEvaluator ev;
        ev.then(Winner::incumbent, "bad logP");
        const auto r = step(start(cfg), cfg, gen, ev);
        if (mode == Ablation::no_feedback) {
            EXPECT_TRUE(r.state.history.empty());
        } else {
            ASSERT_EQ(r.state.history.size(), 1u);
            EXPECT_EQ(r.state.history[0].rationale, "candidate was worse");
        }
        EXPECT_EQ(r.entry.judge_rationale, "bad logP");
    }
}

TEST(Step, NoiseDrawsFromEarlierRationales) {
    RunConfig cfg;
    cfg.noise_q = 1.0;
    cfg.history_policy = HistoryPolicy::keep_all;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.then(Winner::incumbent, "r1").then(Winner::incumbent, "r2").then(Winner::incumbent, "r3");
    auto s = step(start(cfg), cfg, gen, ev).state;
    EXPECT_EQ(s.history[0].rationale, "r1");  // single-entry pool: nothing to swap with
    s = step(s, cfg, gen, ev).state;
    EXPECT_EQ(s.history[1].rationale, "r1");
    s = step(s, cfg, gen, ev).state;
    EXPECT_NE(s.history[2].rationale, "r3");
    EXPECT_EQ(s.rationale_pool, (std::vector<std::string>{"r1", "r2", "r3"}));
}

TEST(Run, FixedBudgetWhenAlwaysRejected) {
    RunConfig cfg;
    cfg.T = 5;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.fallback = Evaluation{Winner::incumbent, "no", 1, {}, {}};
    const auto res = run(cfg, start(cfg), gen, ev);
    EXPECT_EQ(res.trajectory.size(), 5u);
    EXPECT_EQ(res.state.incumbent.payload, "p0");
    EXPECT_EQ(res.stop, StopReason::budget);
    EXPECT_TRUE(res.complete);
}

TEST(Run, PatienceStopsEarly) {
    RunConfig cfg;
    cfg.T = 100;
    cfg.patience_k = 3;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    ev.fallback = Evaluation{Winner::incumbent, "no", 1, {}, {}};
    const auto res = run(cfg, start(cfg), gen, ev);
    EXPECT_EQ(res.state.t, 3u);
    EXPECT_EQ(res.stop, StopReason::patience);
}

TEST(Run, BackendFailureYieldsIncompletePartialResult) {
    RunConfig cfg;
    cfg.T = 10;
    CountingGenerator gen;
    gen.fail_on = 4;
    ScriptedEvaluator ev;
    ev.fallback = Evaluation{Winner::incumbent, "no", 1, {}, {}};
    const auto res = run(cfg, start(cfg), gen, ev);
    EXPECT_FALSE(res.complete);
    EXPECT_EQ(res.stop, StopReason::backend_failure);
    EXPECT_EQ(res.trajectory.size(), 3u);
    EXPECT_EQ(res.state.t, 3u);
}

TEST(Run, RejectsInvalidConfig) {
    RunConfig cfg;
    cfg.noise_q = 1.5;
    CountingGenerator gen;
    ScriptedEvaluator ev;
    EXPECT_THROW(run(cfg, start(cfg), gen, ev), ConfigError);
    cfg = {};
    cfg.T = 0;
    EXPECT_THROW(run(cfg, start(cfg), gen, ev), ConfigError);
}

namespace {

struct SyntheticRun {
    RunResult res;
    RunState initial;
};

SyntheticRun synthetic_run(const RunConfig& cfg) {
    synthetic::ExactJudge judge(synthetic::Task::from_seed(cfg.seed));
    synthetic::HintFollowingGenerator gen;
    stats::RngStream rng(cfg.seed);
    auto init = gen.initialize("t", rng);
    auto s0 = initial_state(cfg, init, judge.score(init));
    return {run(cfg, s0, gen, judge), s0};
}

}  // namespace

TEST(Invariants, SyntheticRunsAcrossSeedsAndModes) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        for (auto mode : {Ablation::full, Ablation::binary_only, Ablation::no_feedback, Ablation::random_feedback}) {
            for (auto policy : {HistoryPolicy::reset_on_accept, HistoryPolicy::keep_all}) {
                RunConfig cfg;
                cfg.T = 60;
                cfg.seed = seed;
                cfg.ablation = mode;
                cfg.history_policy = policy;
                cfg.noise_q = seed % 3 == 0 ? 0.5 : 0.0;
                const auto [res, s0] = synthetic_run(cfg);
                double prev = *s0.incumbent_score;
                std::string prev_id = s0.incumbent.id;
                std::uint64_t calls = 0, since_accept = 0, kept = 0;
                for (const auto& e : res.trajectory) {
                    ASSERT_TRUE(e.incumbent_score);
                    EXPECT_GE(*e.incumbent_score, prev);  // best-score monotonicity
                    const bool changed = e.incumbent_id != prev_id;
                    EXPECT_EQ(changed, e.accepted);  // acceptance coupling
                    if (changed) EXPECT_EQ(e.batch[0].winner, Winner::candidate);
                    for (const auto& c : e.batch) calls += c.oracle_calls;
                    EXPECT_EQ(e.oracle_calls, calls);  // budget accounting
                    since_accept = e.accepted ? 0 : since_accept + 1;
                    kept += mode == Ablation::no_feedback ? 0 : 1;
                    if (mode == Ablation::no_feedback) {
                        EXPECT_EQ(e.history_size, 0u);
                    } else if (policy == HistoryPolicy::reset_on_accept) {
                        EXPECT_EQ(e.history_size, since_accept);
                    } else {
                        EXPECT_EQ(e.history_size, kept);
                    }
                    prev = *e.incumbent_score;
                    prev_id = e.incumbent_id;
                }
            }
        }
    }
}

TEST(Invariants, ReplayIsByteIdentical) {
    RunConfig cfg;
    cfg.T = 40;
    cfg.seed = 42;
    cfg.noise_q = 0.25;
    EXPECT_EQ(jsonl(synthetic_run(cfg).res.trajectory), jsonl(synthetic_run(cfg).res.trajectory));
}

TEST(Golden, SyntheticSeed42TenSteps) {
    RunConfig cfg;
    cfg.T = 10;
    cfg.seed = 42;
    const auto [res, s0] = synthetic_run(cfg);
    const std::string text = to_jsonl_line(initial_entry(s0, logical_clock())) + jsonl(res.trajectory);
    const std::filesystem::path golden = std::filesystem::path(FDESCENT_FIXTURE_DIR) / "synthetic_seed42_t10.jsonl";
    if (std::getenv("FDESCENT_UPDATE_GOLDEN")) io::write_file(golden, text);
    EXPECT_EQ(text, io::read_file(golden));
}

TEST(Trajectory, JsonRoundTrip) {
    RunConfig cfg;
    cfg.T = 25;
    cfg.seed = 3;
    cfg.batch_size = 2;
    cfg.noise_q = 0.5;
    const auto res = synthetic_run(cfg).res;
    std::stringstream ss(jsonl(res.trajectory));
    EXPECT_EQ(read_jsonl(ss), res.trajectory);
    std::stringstream bad("{\"t\": 1}\n");
    EXPECT_THROW(read_jsonl(bad), InputError);
}

TEST(Trajectory, ResumeMatchesUninterruptedRun) {
    for (auto policy : {HistoryPolicy::reset_on_accept, HistoryPolicy::keep_all}) {
        RunConfig cfg;
        cfg.T = 30;
        cfg.seed = 9;
        cfg.noise_q = 0.25;
        cfg.batch_size = 2;
        cfg.history_policy = policy;
        const auto full = synthetic_run(cfg);

        RunConfig first = cfg;
        first.T = 11;
        const auto part = synthetic_run(first);
        std::vector<TrajectoryEntry> lines{initial_entry(part.initial, logical_clock())};
        lines.insert(lines.end(), part.res.trajectory.begin(), part.res.trajectory.end());
        const auto rebuilt = state_from_trajectory(cfg, Domain::synthetic, lines);
        EXPECT_EQ(rebuilt, part.res.state);

        synthetic::ExactJudge judge(synthetic::Task::from_seed(cfg.seed));
        synthetic::HintFollowingGenerator gen;
        const auto rest = run(cfg, rebuilt, gen, judge);
        auto joined = part.res.trajectory;
        joined.insert(joined.end(), rest.trajectory.begin(), rest.trajectory.end());
        EXPECT_EQ(jsonl(joined), jsonl(full.res.trajectory));
    }
}

TEST(Synthetic, EditTextRoundTrips) {
    for (const synthetic::Edit e : {synthetic::Edit{0, 3}, synthetic::Edit{39, -25}, synthetic::Edit{7, 0}}) {
        EXPECT_EQ(synthetic::parse_edit("blah. to improve, " + synthetic::format_edit(e)), e);
    }
    EXPECT_FALSE(synthetic::parse_edit("candidate was worse"));
    EXPECT_FALSE(synthetic::parse_edit("edit: position x +1"));
}

TEST(Synthetic, JudgeHintMovesWinnerTowardTarget) {
    const auto task = synthetic::Task::from_seed(5);
    synthetic::ExactJudge judge(task);
    stats::RngStream rng(5);
    const Artifact inc{"i", Domain::synthetic, std::string(40, 'm'), {}};
    for (int i = 0; i < 100; ++i) {
        std::string c = inc.payload;
        c[rng.uniform_index(40)] = static_cast<char>('a' + rng.uniform_index(26));
        const Artifact cand{"c", Domain::synthetic, c, {}};
        auto jr = rng.fork(i);
        const auto ev = judge.evaluate(cand, inc, jr);
        const bool better = task.score(c) > task.score(inc.payload);
        EXPECT_EQ(ev.winner == Winner::candidate, better);
        const auto e = synthetic::parse_edit(ev.rationale);
        ASSERT_TRUE(e);
        const std::string& w = better ? c : inc.payload;
        EXPECT_EQ(task.score(synthetic::apply_edit(w, *e)), task.score(w) + std::abs(e->delta));
    }
}

TEST(Synthetic, GeneratorStrategies) {
    synthetic::HintFollowingGenerator gen(6);
    stats::RngStream rng(1);
    const Artifact inc{"i", Domain::synthetic, "mmmmmm", {}};
    auto p = gen.propose(inc, {{"c1", false, "x. to improve the winner, edit: position 2 +3", 1, "mmnmmm", {}}}, rng);
    EXPECT_EQ(p.candidate.payload, "mmpmmm");
    p = gen.propose(inc, {{"c1", false, "candidate was worse", 1, "mmmmmq", {}}}, rng);
    EXPECT_EQ(p.candidate.payload, "mmmmmi");
    p = gen.propose(inc, {}, rng);
    EXPECT_EQ(synthetic::single_edit(inc.payload, p.candidate.payload).has_value(), true);
}

TEST(ChatGeneratorTest, MissingTagBecomesFormatError) {
    llm::ScriptedBackend chat({"<artifact>hello</artifact>", "oops"});
    ChatGenerator gen(chat, "sys", ChatGenerator::Options{"m", 0.6, "artifact", llm::RetryPolicy::immediate()});
    stats::RngStream rng(1);
    const Artifact inc{"i", Domain::synthetic, "x", {}};
    const std::vector<FeedbackRecord> hist{{"c1", false, "too short", 1, "y", {}}};
    auto p = gen.propose(inc, hist, rng);
    EXPECT_EQ(p.candidate.payload, "hello");
    EXPECT_FALSE(p.format_error);
    const auto req = chat.calls()[0];
    EXPECT_EQ(req.temperature, 0.6);
    EXPECT_NE(req.messages[1].content.find("[rejected] too short"), std::string::npos);
    p = gen.propose(inc, {}, rng);
    EXPECT_TRUE(p.format_error);
    EXPECT_NE(chat.calls()[1].messages[1].content.find("No feedback"), std::string::npos);
}
