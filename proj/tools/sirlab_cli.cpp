// Command-line front end: scenario validation, single deterministic and
// stochastic runs, the four convergence studies, and manifest replay.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure,
// 3 acceptance failure of a study under --strict.

#include "sirlab/experiments.hpp"
#include "sirlab/parallel.hpp"
#include "sirlab/pde_reference.hpp"
#include "sirlab/report_io.hpp"
#include "sirlab/scenario.hpp"
#include "sirlab/ssa.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace sirlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAcceptance = 3;

struct Options {
    std::string scenario;
    std::string out = "sirlab-out";
    std::string manifest;
    std::uint64_t seed = 1;
    int replicas = 0;
    unsigned threads = 1;
    std::vector<std::string> formats;
    bool strict = false;
};

struct RunResult {
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::vector<std::uint64_t>> seeds;
    std::optional<Verdict> verdict;
    std::string summary;
};

bool wants(const Options& o, std::string_view fmt) {
    return std::find(o.formats.begin(), o.formats.end(), fmt) != o.formats.end();
}

int sample_intervals(const Scenario& sc) {
    return sc.dense ? std::max(sc.sample_count, static_cast<int>(kMinDenseSamples)) : sc.sample_count;
}

const std::map<std::string, ExperimentKind> kStudies = {
    {"study-eps", ExperimentKind::DiscretizationStudy},
    {"study-lln", ExperimentKind::FixedEpsLLN},
    {"study-supnorm", ExperimentKind::JointSupNormLLN},
    {"study-martingale", ExperimentKind::MartingaleDecay},
};

RunResult run_ode(const Scenario& sc, const Options& o) {
    FineMeshOptions fo = sc.integration;
    fo.sample_intervals = sample_intervals(sc);
    const ReferenceSolution sol = solve_reference_fine(sc.params, sc.initial, sc.grid, sc.horizon, fo);
    RunResult res;
    if (wants(o, "csv")) res.files.emplace_back("trajectory.csv", trajectory_csv(sol.trajectory));
    if (wants(o, "json")) res.files.emplace_back("trajectory.json", trajectory_json(sol.trajectory, hash_hex(sc.hash), "patch-ode"));
    const PatchState& last = sol.trajectory.back();
    std::ostringstream os;
    os << "ode: " << sc.grid.describe() << ", T = " << sc.horizon << ", final mass " << format_number(mass(last))
       << ", min component " << format_number(min_component(last)) << "\n";
    res.summary = os.str();
    return res;
}

RunResult run_simulate(const Scenario& sc, const Options& o) {
    const int replicas = o.replicas > 0 ? o.replicas : 1;
    const auto times = uniform_times(sc.horizon, sample_intervals(sc));
    SimOptions so;
    so.initial_mode = sc.initial_mode;
    std::vector<SimOutput> outs(static_cast<std::size_t>(replicas));
    RunResult res;
    res.seeds.emplace_back();
    for (int r = 0; r < replicas; ++r) res.seeds[0].push_back(replica_seed(o.seed, 0, static_cast<std::size_t>(r)));
    parallel_for(outs.size(), o.threads, [&](std::size_t r) {
        outs[r] = simulate(sc.N, sc.params, sc.initial, sc.grid, sc.horizon, times, res.seeds[0][r], so);
    });
    if (wants(o, "csv")) {
        std::string csv;
        for (std::size_t r = 0; r < outs.size(); ++r) {
            std::string part = ssa_csv(outs[r], static_cast<int>(r));
            csv += r == 0 ? part : part.substr(part.find('\n') + 1);
        }
        res.files.emplace_back("ssa.csv", std::move(csv));
    }
    if (wants(o, "json")) {
        for (std::size_t r = 0; r < outs.size(); ++r) {
            const std::string name = replicas == 1 ? "ssa.json" : "ssa_" + std::to_string(r) + ".json";
            res.files.emplace_back(name, ssa_json(outs[r], hash_hex(sc.hash)));
        }
    }
    std::uint64_t events = 0;
    for (const auto& out : outs) events += out.event_count;
    std::ostringstream os;
    os << "simulate: " << sc.grid.describe() << ", N = " << sc.N << ", " << replicas << " replica(s), " << events
       << " events\n";
    res.summary = os.str();
    return res;
}

RunResult run_study(const Scenario& sc, const Options& o, ExperimentKind kind) {
    const ExperimentPlan plan = make_plan(sc, kind, o.seed, o.replicas, o.threads);
    validate_plan(plan);
    const ExperimentReport report = run_experiment(plan);
    RunResult res;
    res.verdict = evaluate(report, sc.study.thresholds);
    for (std::size_t j = 0; j < plan.schedule.size(); ++j) {
        std::vector<std::uint64_t> row;
        for (int r = 0; r < plan.schedule[j].replicas; ++r)
            row.push_back(replica_seed(plan.seed, j, static_cast<std::size_t>(r)));
        if (!row.empty()) res.seeds.push_back(std::move(row));
    }
    const std::string hash = hash_hex(sc.hash);
    if (wants(o, "csv")) {
        if (kind == ExperimentKind::DiscretizationStudy) res.files.emplace_back("study.csv", study_csv(report.study));
        else res.files.emplace_back("report.csv", report_csv(report));
        if (kind == ExperimentKind::MartingaleDecay) res.files.emplace_back("mean_checks.csv", mean_checks_csv(report));
    }
    if (wants(o, "json")) res.files.emplace_back("report.json", report_json(report, *res.verdict, hash));
    if (wants(o, "svg")) {
        SvgPlot plot;
        plot.title = std::string(to_string(kind));
        plot.y_label = "mean error";
        for (const auto& row : report.rows) {
            const bool mesh = kind == ExperimentKind::DiscretizationStudy;
            plot.data.x.push_back(mesh ? row.inv_eps : static_cast<double>(row.N));
            plot.data.y.push_back(row.mean_error);
        }
        plot.x_label = kind == ExperimentKind::DiscretizationStudy ? "1/eps" : "N";
        if (kind == ExperimentKind::DiscretizationStudy) plot.y_label = "sup error";
        if (kind == ExperimentKind::FixedEpsLLN || kind == ExperimentKind::MartingaleDecay)
            plot.guide_slope = sc.study.thresholds.slope_target;
        res.files.emplace_back("plot.svg", loglog_svg(plot));
    }

    std::ostringstream os;
    os << to_string(kind) << " (seed " << plan.seed << ")\n";
    os << "  inv_eps          N   replicas        mean_error      stderr_error\n";
    for (const auto& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof line, "  %7d %10lld %10d %17.6e %17.6e\n", row.inv_eps,
                      static_cast<long long>(row.N), row.replicas, row.mean_error, row.stderr_error);
        os << line;
    }
    if (report.slope) os << "  log-log slope: " << format_number(*report.slope) << "\n";
    os << "  verdict: " << (res.verdict->pass ? "PASS" : "FAIL") << " (" << res.verdict->detail << ")\n";
    res.summary = os.str();
    return res;
}

RunResult execute(const std::string& command, const Scenario& sc, const Options& o) {
    if (command == "ode") return run_ode(sc, o);
    if (command == "simulate") return run_simulate(sc, o);
    return run_study(sc, o, kStudies.at(command));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs one command and writes its outputs plus manifest.json into o.out.
int run_and_record(const std::string& command, const Scenario& sc, const Options& o, RunManifest* written) {
    RunManifest m;
    m.command = command;
    m.scenario_hash = hash_hex(sc.hash);
    m.scenario_text = sc.canonical;
    m.seed = o.seed;
    m.replicas = o.replicas;
    m.threads = o.threads;
    m.formats = o.formats;
    m.started_utc = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();

    RunResult res = execute(command, sc, o);

    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.finished_utc = utc_timestamp();
    m.replica_seeds = res.seeds;
    for (const auto& [name, body] : res.files) m.outputs.push_back(write_output(o.out, name, body));
    write_output(o.out, "manifest.json", manifest_json(m));
    if (written) *written = m;

    std::cout << res.summary;
    for (const auto& f : m.outputs) std::cout << "  wrote " << (std::filesystem::path(o.out) / f.name).string() << "\n";
    if (res.verdict && !res.verdict->pass && o.strict) return kExitAcceptance;
    return kExitOk;
}

int replay(const Options& o) {
    const RunManifest recorded = parse_manifest(read_file(o.manifest));
    const Scenario sc = parse_scenario(recorded.scenario_text, o.manifest);
    if (hash_hex(sc.hash) != recorded.scenario_hash)
        throw std::invalid_argument("embedded scenario does not match the recorded hash");
    Options ro = o;
    ro.seed = recorded.seed;
    ro.replicas = recorded.replicas;
    ro.formats = recorded.formats;
    RunManifest fresh;
    run_and_record(recorded.command, sc, ro, &fresh);
    int mismatches = 0;
    for (const auto& want : recorded.outputs) {
        const auto it = std::find_if(fresh.outputs.begin(), fresh.outputs.end(),
                                     [&](const ManifestFile& f) { return f.name == want.name; });
        if (it == fresh.outputs.end() || it->hash != want.hash) {
            std::cout << "  MISMATCH " << want.name << "\n";
            ++mismatches;
        }
    }
    std::cout << "replay: " << recorded.outputs.size() - mismatches << "/" << recorded.outputs.size()
              << " outputs identical\n";
    return mismatches == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sirlab: spatial SIR patch model, stochastic simulation and convergence studies"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::string> run_commands = {"validate", "ode", "simulate", "study-eps",
                                                   "study-lln", "study-supnorm", "study-martingale"};
    const std::map<std::string, std::string> help = {
        {"validate", "check a scenario file and print its normalized summary"},
        {"ode", "integrate the deterministic patch model"},
        {"simulate", "run the stochastic process (one run per replica)"},
        {"study-eps", "mesh refinement of the deterministic model against a fine reference"},
        {"study-lln", "law of large numbers at the scenario mesh over study.N_list"},
        {"study-supnorm", "joint mesh and population schedule from study.schedule"},
        {"study-martingale", "decay of the compensated martingale over study.N_list"},
    };
    for (const auto& name : run_commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
        if (name == "validate") continue;
        sub->add_option("--seed", o.seed, "base seed (replica seeds derive from it)")->capture_default_str();
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--replicas", o.replicas, "replica count override (0 = scenario value)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
        sub->add_option("--format", o.formats, "csv, json or svg; repeatable (default csv and json)")
            ->check(CLI::IsMember({"csv", "json", "svg"}))
            ->take_all();
        sub->add_flag("--strict", o.strict, "exit 3 when a study misses its acceptance thresholds");
    }
    CLI::App* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest and compare outputs");
    rep->add_option("--manifest", o.manifest, "manifest.json from an earlier run")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", o.out, "output directory for the regenerated files")->capture_default_str();
    rep->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        if (e.get_exit_code() != 0) std::cerr << "\n" << app.help();
        return kExitUsage;
    }
    if (o.formats.empty()) o.formats = {"csv", "json"};
    std::sort(o.formats.begin(), o.formats.end());
    o.formats.erase(std::unique(o.formats.begin(), o.formats.end()), o.formats.end());
    o.threads = resolve_threads(o.threads);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "replay") return replay(o);
        const Scenario sc = load_scenario(o.scenario);
        if (command == "validate") {
            std::cout << describe(sc);
            return kExitOk;
        }
        return run_and_record(command, sc, o, nullptr);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
