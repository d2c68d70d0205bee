// fdescent: command-line entry point.
//
//   fdescent optimize --domain synthetic --seed 7 --iters 20 --out runs/s7
//   fdescent resume runs/s7
//   fdescent theory bestofn --d 2 --n 9 --samples 100000
//   fdescent analyze pareto runs/m1
//
// Exit codes: 0 success, 1 configuration or usage error, 2 backend failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "fdescent/io/config.hpp"
#include "fdescent/io/runner.hpp"
#include "fdescent/judge/audit.hpp"
#include "fdescent/promptopt/domain.hpp"
#include "fdescent/theory/best_of_n.hpp"
#include "fdescent/theory/first_order.hpp"
#include "fdescent/theory/grid_search.hpp"
#include "fdescent/theory/separation.hpp"

using namespace fdescent;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBackend = 2;

std::string num(double v) { return util::shortest(v); }

int report(const io::RunOutcome& o, const fs::path& dir) {
    const auto& r = o.result;
    std::cout << "run " << (r.complete ? "complete" : "incomplete") << ": " << dir.string() << " (" << r.state.t
              << " iterations, " << r.state.oracle_calls << " oracle calls, incumbent score "
              << (r.state.incumbent_score ? num(*r.state.incumbent_score) : "n/a") << ")\n";
    if (!r.complete) {
        std::cerr << "error: " << r.error << "\n";
        return kExitBackend;
    }
    return kExitOk;
}

// ---- optimize / resume ----

struct OptimizeArgs {
    std::string domain;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> iters;
    std::optional<std::uint64_t> batch;
    std::optional<std::string> ablation;
    std::optional<double> noise_q;
    std::string clock;
    std::string out;
};

int cmd_optimize(const OptimizeArgs& a) {
    io::AppConfig cfg;
    if (!a.config.empty()) {
        cfg = io::load_config(a.config);
        if (!a.domain.empty() && parse_domain(a.domain) != cfg.domain) {
            throw ConfigError("domain", "--domain disagrees with the config file");
        }
    } else if (!a.domain.empty()) {
        cfg = io::defaults_for(parse_domain(a.domain));
    }
    if (a.seed) cfg.run.seed = *a.seed;
    if (a.iters) cfg.run.T = *a.iters;
    if (a.batch) cfg.run.batch_size = *a.batch;
    if (a.ablation) cfg.run.ablation = parse_ablation(*a.ablation);
    if (a.noise_q) cfg.run.noise_q = *a.noise_q;
    if (!a.clock.empty()) cfg.clock = a.clock;
    cfg.validate();
    const fs::path dir = a.out.empty() ? fs::path("runs") / (std::string(to_string(cfg.domain)) + "-seed" +
                                                             std::to_string(cfg.run.seed))
                                       : fs::path(a.out);
    return report(io::optimize(cfg, dir), dir);
}

int cmd_resume(const std::string& dir) {
    const auto o = io::resume(dir);
    if (o.noop) {
        std::cout << "run already complete: " << dir << "\n";
        return kExitOk;
    }
    return report(o, dir);
}

// ---- theory ----

struct TheoryArgs {
    std::size_t d = 2;
    std::uint64_t n = 9;
    std::uint64_t samples = 100000;
    double mu = 2.0;
    double L = 4.0;
    double radius = 1.0;
    double eps = 0.01;
    std::uint64_t seed = 0;
    std::size_t trials = 2000;
    std::size_t steps = 200;
    std::uint64_t queries = 200;
    std::vector<std::size_t> dims = {10, 20, 30};
};

int cmd_bestofn(const TheoryArgs& a) {
    const auto inst = theory::QuadraticInstance::isotropic(a.d, a.mu, a.radius);
    stats::RngStream rng(a.seed, stats::stream_id("bestofn"));
    const auto est = theory::best_of_n_gap(inst, a.n, rng, a.samples);
    const double closed = theory::best_of_n_closed_form(a.n, a.d, a.mu, a.radius);
    std::cout << "d,n,mu,R,samples,closed_form,empirical_mean,se,z\n"
              << a.d << "," << a.n << "," << num(a.mu) << "," << num(a.radius) << "," << a.samples << "," << num(closed)
              << "," << num(est.mean) << "," << num(est.se) << "," << num((est.mean - closed) / est.se) << "\n";
    return kExitOk;
}

int cmd_contraction(const TheoryArgs& a) {
    const auto inst = theory::QuadraticInstance::spread(a.d, a.mu, a.L, a.radius);
    const auto oracle = theory::DirectionOracle::coordinate_sparse(a.d);
    stats::RngStream draw(a.seed, stats::stream_id("contraction-start"));
    const auto z0 = theory::sample_sphere_point(inst.z_star(), a.radius / 10.0, draw);
    const auto curve = theory::mean_gap_curve(inst, oracle, a.steps, a.trials,
                                              stats::RngStream(a.seed, stats::stream_id("contraction")),
                                              std::span<const double>(z0));
    const double factor = oracle.contraction_bound(inst.mu(), inst.L());
    std::cout << "t,mean_gap,se,bound\n";
    for (std::size_t t = 0; t <= a.steps; ++t) {
        std::cout << t << "," << num(curve.mean[t]) << "," << num(curve.se[t]) << ","
                  << num(std::pow(factor, static_cast<double>(t)) * curve.mean[0]) << "\n";
    }
    return kExitOk;
}

int cmd_grid(const TheoryArgs& a) {
    std::cout << "d,mu,R,eps,points_required\n";
    for (auto d : a.dims) {
        std::cout << d << "," << num(a.mu) << "," << num(a.radius) << "," << num(a.eps) << ","
                  << num(theory::grid_points_required(a.radius, d, a.mu, a.eps)) << "\n";
    }
    return kExitOk;
}

int cmd_separation(const TheoryArgs& a) {
    std::cout << "d,queries,first_order_gap,first_order_se,best_of_n_gap,ratio\n";
    for (auto d : a.dims) {
        const auto p = theory::dimension_separation(d, a.queries, a.mu, a.L, a.radius, a.trials,
                                                    stats::RngStream(a.seed, stats::stream_id("separation")));
        std::cout << p.d << "," << p.queries << "," << num(p.first_order_gap) << "," << num(p.first_order_se) << ","
                  << num(p.best_of_n_gap) << "," << num(p.ratio()) << "\n";
    }
    return kExitOk;
}

// ---- analyze ----

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

int cmd_pareto(const std::string& dir) {
    const auto text = io::read_file(fs::path(dir) / "exports" / "molecules.csv");
    std::vector<std::vector<std::string>> rows;
    std::vector<mol::ParetoPoint> pts;
    bool header = true;
    for (const auto& line : util::lines(text)) {
        if (header || line.empty()) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 5) throw InputError("molecules.csv: malformed row: " + line);
        if (f[1] != "1") continue;
        pts.push_back({-std::stod(f[2]), std::stod(f[3])});
        rows.push_back(std::move(f));
    }
    std::cout << "smiles,affinity,qed,score\n";
    for (auto i : mol::pareto_front(pts)) {
        std::cout << io::csv_field(rows[i][0]) << "," << num(pts[i].affinity) << "," << num(pts[i].qed) << ","
                  << rows[i][4] << "\n";
    }
    return kExitOk;
}

int cmd_alignment(const std::string& dir, bool use_llm, std::uint64_t seed) {
    const auto lines = io::read_trajectory(fs::path(dir) / "trajectory.jsonl");
    if (!use_llm) {
        // Verdicts against the recorded scores.
        std::vector<std::optional<bool>> items;
        std::optional<double> inc;
        for (const auto& e : lines) {
            if (e.t > 0) {
                for (const auto& c : e.batch) {
                    if (c.format_error || c.winner == judge::Winner::inconclusive || !c.score || !inc ||
                        *c.score == *inc) {
                        continue;
                    }
                    items.push_back((c.winner == judge::Winner::candidate) == (*c.score > *inc));
                }
            }
            inc = e.incumbent_score;
        }
        const auto s = judge::summarize_audits(items);
        std::cout << "mode,items,agree,win_rate,p_value\nscore_agreement," << s.trials << "," << s.wins << ","
                  << num(s.win_rate) << "," << num(s.p_value) << "\n";
        return kExitOk;
    }
    // Which feedback did the revision follow: the one in its history or a random other?
    std::vector<std::string> pool;
    for (const auto& e : lines) {
        for (const auto& c : e.batch) {
            if (c.recorded_rationale) pool.push_back(*c.recorded_rationale);
        }
    }
    auto ep = llm::Endpoint::from_env();
    llm::HttpChatBackend chat(ep);
    judge::ChatJudge judge_backend(chat, ep.model);
    stats::RngStream rng(seed, stats::stream_id("alignment"));
    std::vector<std::optional<bool>> items;
    std::optional<std::string> last_feedback;
    for (const auto& e : lines) {
        if (e.t > 0 && last_feedback) {
            for (const auto& c : e.batch) {
                if (c.format_error) continue;
                std::vector<std::string> others;
                for (const auto& p : pool) {
                    if (p != *last_feedback) others.push_back(p);
                }
                if (others.empty()) continue;
                auto item_rng = rng.fork(e.t);
                const auto& scrambled = others[item_rng.uniform_index(others.size())];
                items.push_back(judge::alignment_audit(c.payload, *last_feedback, scrambled, judge_backend, item_rng));
            }
        }
        for (const auto& c : e.batch) {
            if (c.recorded_rationale) last_feedback = *c.recorded_rationale;
        }
        if (e.accepted) last_feedback.reset();
    }
    const auto s = judge::summarize_audits(items);
    std::cout << "mode,items,agree,skipped,win_rate,p_value\nfeedback_audit," << s.trials << "," << s.wins << ","
              << s.skipped << "," << num(s.win_rate) << "," << num(s.p_value) << "\n";
    return kExitOk;
}

int cmd_lift_report(const std::string& examples_path, const std::string& hyp_path, const std::string& tags_path,
                    bool use_llm, double threshold, const std::string& out) {
    const auto examples = promptopt::read_examples_jsonl(io::read_file(examples_path));
    promptopt::Analysis a;
    if (use_llm) {
        auto ep = llm::Endpoint::from_env();
        llm::HttpChatBackend chat(ep);
        promptopt::AnalysisOptions opt;
        opt.model = ep.model;
        opt.success_threshold = threshold;
        a = promptopt::analyze(examples, chat, opt);
    } else {
        if (hyp_path.empty() || tags_path.empty()) {
            throw ConfigError("hypotheses", "--hypotheses and --tags are required without --llm");
        }
        const auto hj = nlohmann::json::parse(io::read_file(hyp_path), nullptr, false);
        if (hj.is_discarded() || !hj.is_array()) throw InputError("hypotheses file must be a JSON array");
        std::vector<promptopt::Hypothesis> hyps;
        for (const auto& h : hj) {
            promptopt::Hypothesis x;
            x.text = h.is_string() ? h.get<std::string>() : h.value("text", std::string());
            if (x.text.empty()) throw InputError("hypothesis text must not be empty");
            if (h.is_object() && h.value("kind", std::string()) == "output_pattern") {
                x.kind = promptopt::HypothesisKind::output_pattern;
            }
            hyps.push_back(std::move(x));
        }
        promptopt::TagResult tags;
        for (const auto& line : util::lines(io::read_file(tags_path))) {
            if (util::trim(line).empty()) continue;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("id") || !j.contains("tags")) throw InputError("tags line: " + line);
            std::vector<bool> v;
            for (const auto& t : j["tags"]) v.push_back(t.is_boolean() ? t.get<bool>() : t.get<int>() != 0);
            tags.tags[j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()] = std::move(v);
        }
        a = promptopt::analyze_from_tags(examples, std::move(hyps), std::move(tags), threshold);
    }
    std::cout << a.summary;
    if (!a.summary.ends_with("\n")) std::cout << "\n";
    if (!out.empty()) io::write_file(out, promptopt::findings_to_json(a).dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback-driven artifact optimisation and its theory experiments."};
    app.require_subcommand(1);
    int rc = kExitOk;

    OptimizeArgs opt;
    auto* optimize = app.add_subcommand("optimize", "Start a run in a new run directory");
    optimize->add_option("--domain", opt.domain, "synthetic | molecule | promptset");
    optimize->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
    optimize->add_option("--seed", opt.seed, "Run seed");
    optimize->add_option("--iters", opt.iters, "Iteration budget T");
    optimize->add_option("--batch", opt.batch, "Candidates per iteration");
    optimize->add_option("--ablation", opt.ablation, "full | binary_only | no_feedback | random_feedback");
    optimize->add_option("--noise-q", opt.noise_q, "Rationale corruption probability");
    optimize->add_option("--clock", opt.clock, "logical | wall");
    optimize->add_option("--out", opt.out, "Run directory");
    optimize->callback([&] { rc = cmd_optimize(opt); });

    std::string resume_dir;
    auto* resume = app.add_subcommand("resume", "Continue an incomplete run");
    resume->add_option("dir", resume_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    resume->callback([&] { rc = cmd_resume(resume_dir); });

    TheoryArgs th_b, th_c, th_g, th_s;
    th_c.d = 10;
    th_c.mu = 1.0;
    th_s.mu = 1.0;
    auto* theory_cmd = app.add_subcommand("theory", "Quadratic-model experiments (CSV on stdout)");
    theory_cmd->require_subcommand(1);
    auto* bestofn = theory_cmd->add_subcommand("bestofn", "Best-of-N expected gap: closed form vs Monte Carlo");
    bestofn->add_option("--d", th_b.d);
    bestofn->add_option("--n", th_b.n);
    bestofn->add_option("--samples", th_b.samples);
    bestofn->add_option("--mu", th_b.mu);
    bestofn->add_option("--R", th_b.radius);
    bestofn->add_option("--seed", th_b.seed);
    bestofn->callback([&] { rc = cmd_bestofn(th_b); });
    auto* contraction = theory_cmd->add_subcommand("contraction", "Coordinate-sparse descent gap curve");
    contraction->add_option("--d", th_c.d);
    contraction->add_option("--mu", th_c.mu);
    contraction->add_option("--L", th_c.L);
    contraction->add_option("--R", th_c.radius);
    contraction->add_option("--trials", th_c.trials);
    contraction->add_option("--steps", th_c.steps);
    contraction->add_option("--seed", th_c.seed);
    contraction->callback([&] { rc = cmd_contraction(th_c); });
    auto* grid = theory_cmd->add_subcommand("grid", "Grid points needed for an eps-optimal point");
    grid->add_option("--dims", th_g.dims)->delimiter(',');
    grid->add_option("--mu", th_g.mu);
    grid->add_option("--R", th_g.radius);
    grid->add_option("--eps", th_g.eps);
    grid->callback([&] { rc = cmd_grid(th_g); });
    auto* separation = theory_cmd->add_subcommand("separation", "First-order vs best-of-N at a fixed query budget");
    separation->add_option("--dims", th_s.dims)->delimiter(',');
    separation->add_option("--queries", th_s.queries);
    separation->add_option("--mu", th_s.mu);
    separation->add_option("--L", th_s.L);
    separation->add_option("--R", th_s.radius);
    separation->add_option("--trials", th_s.trials);
    separation->add_option("--seed", th_s.seed);
    separation->callback([&] { rc = cmd_separation(th_s); });

    auto* analyze = app.add_subcommand("analyze", "Read-only analyses");
    analyze->require_subcommand(1);
    std::string adir;
    auto* pareto = analyze->add_subcommand("pareto", "Affinity/QED Pareto front of a molecule run");
    pareto->add_option("dir", adir)->required()->check(CLI::ExistingDirectory);
    pareto->callback([&] { rc = cmd_pareto(adir); });
    bool use_llm = false;
    std::uint64_t audit_seed = 0;
    auto* alignment = analyze->add_subcommand("alignment", "Judge/score agreement, or the feedback audit with --llm");
    alignment->add_option("dir", adir)->required()->check(CLI::ExistingDirectory);
    alignment->add_flag("--llm", use_llm, "Run the feedback audit against the configured chat endpoint");
    alignment->add_option("--seed", audit_seed);
    alignment->callback([&] { rc = cmd_alignment(adir, use_llm, audit_seed); });
    std::string examples, hyps, tags, findings_out;
    double threshold = promptopt::kSuccessThreshold;
    auto* lift = analyze->add_subcommand("lift-report", "Validated differences between two prompts");
    lift->add_option("examples", examples, "JSONL of {id, input, output_A, output_B, score_A, score_B, feedback}")
        ->required()
        ->check(CLI::ExistingFile);
    lift->add_option("--hypotheses", hyps, "JSON array of hypotheses")->check(CLI::ExistingFile);
    lift->add_option("--tags", tags, "JSONL of {id, tags}")->check(CLI::ExistingFile);
    lift->add_flag("--llm", use_llm, "Generate hypotheses and tags with the configured chat endpoint");
    lift->add_option("--threshold", threshold, "Score counted as success");
    lift->add_option("--out", findings_out, "Write findings JSON here");
    lift->callback([&] { rc = cmd_lift_report(examples, hyps, tags, use_llm, threshold, findings_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BackendError& e) {
        std::cerr << "backend failure: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    }
    return rc;
}
