#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args) {
    const std::string cmd = std::string(FDESCENT_CLI) + " " + args + " 2>&1";
    Result r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    while (auto n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fdescent_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, OptimizeSyntheticWritesRunDir) {
    const auto dir = scratch("opt");
    const auto r = cli("optimize --domain synthetic --seed 7 --iters 20 --out " + dir.string());
    EXPECT_EQ(r.code, 0) << r.out;
    for (auto f : {"config.json", "trajectory.jsonl", "summary.json", "manifest.json"}) EXPECT_TRUE(fs::exists(dir / f));
    EXPECT_NE(slurp(dir / "summary.json").find("\"iterations\": 20"), std::string::npos);
    const auto again = cli("resume " + dir.string());
    EXPECT_EQ(again.code, 0);
    EXPECT_NE(again.out.find("already complete"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, SameSeedSameTrajectory) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(cli("optimize --domain molecule --iters 15 --seed 5 --out " + a.string()).code, 0);
    ASSERT_EQ(cli("optimize --domain molecule --iters 15 --seed 5 --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "trajectory.jsonl"), slurp(b / "trajectory.jsonl"));
    const auto pareto = cli("analyze pareto " + a.string());
    EXPECT_EQ(pareto.code, 0);
    EXPECT_EQ(pareto.out.rfind("smiles,affinity,qed,score\n", 0), 0u);
    const auto align = cli("analyze alignment " + a.string());
    EXPECT_EQ(align.code, 0);
    EXPECT_NE(align.out.find("score_agreement"), std::string::npos);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, TheoryBestOfN) {
    const auto r = cli("theory bestofn --d 2 --n 9 --samples 100000");
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "d,n,mu,R,samples,closed_form,empirical_mean,se,z");
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 9u);
    EXPECT_EQ(f[5], "0.1");
    EXPECT_LE(std::abs(std::stod(f[8])), 3.0);
}

TEST(Cli, TheoryOtherExperiments) {
    EXPECT_EQ(cli("theory contraction --trials 50 --steps 10").code, 0);
    EXPECT_EQ(cli("theory grid --dims 1,2,3 --eps 0.01").code, 0);
    const auto s = cli("theory separation --dims 10 --trials 100");
    EXPECT_EQ(s.code, 0);
    EXPECT_NE(s.out.find("\n10,200,"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitOne) {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << R"({"domain":"synthetic","noise_q":1.5})";
    auto r = cli("optimize --config " + (dir / "bad.json").string() + " --out " + (dir / "run").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("noise_q"), std::string::npos);
    std::ofstream(dir / "unknown.json") << R"({"domain":"synthetic","colour":"red"})";
    r = cli("optimize --config " + (dir / "unknown.json").string() + " --out " + (dir / "run").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("colour"), std::string::npos);
    EXPECT_EQ(cli("optimize --bogus").code, 1);
    EXPECT_EQ(cli("").code, 1);
    EXPECT_EQ(cli("optimize --domain promptset --out " + (dir / "p").string()).code, 1);
    EXPECT_EQ(cli("--help").code, 0);
    fs::remove_all(dir);
}

TEST(Cli, BackendFailureExitsTwo) {
    const auto dir = scratch("backend");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << R"({"domain":"molecule","T":3,"molecule":{"oracle":"bridge","bridge_command":["/bin/false"]}})";
    const auto r = cli("optimize --config " + (dir / "c.json").string() + " --out " + (dir / "run").string());
    EXPECT_EQ(r.code, 2) << r.out;
    fs::remove_all(dir);
}

TEST(Cli, LiftReportFromTags) {
    const auto dir = scratch("lift");
    fs::create_directories(dir);
    const fs::path fixture = fs::path(FDESCENT_FIXTURE_DIR) / "promptopt_planted.jsonl";
    std::ofstream(dir / "h.json") << R"([{"text":"asks about a date","kind":"input_characteristic"}])";
    {
        std::ofstream tags(dir / "tags.jsonl");
        std::ifstream in(fixture);
        for (std::string line; std::getline(in, line);) {
            const auto id = line.substr(line.find("\"id\": \"") + 7, 4);
            tags << "{\"id\":\"" << id << "\",\"tags\":[" << (line.find("\"planted\": true") != std::string::npos)
                 << "]}\n";
        }
    }
    const auto r = cli("analyze lift-report " + fixture.string() + " --hypotheses " + (dir / "h.json").string() +
                       " --tags " + (dir / "tags.jsonl").string() + " --out " + (dir / "f.json").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("[A_wins] asks about a date"), std::string::npos) << r.out;
    EXPECT_NE(slurp(dir / "f.json").find("\"lift\": 3.0"), std::string::npos);
    fs::remove_all(dir);
}
