// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "sirlab/experiments.hpp"
#include "sirlab/parallel.hpp"
#include "sirlab/patch_ode.hpp"
#include "sirlab/pde_reference.hpp"
#include "sirlab/report_io.hpp"
#include "sirlab/scenario.hpp"
#include "sirlab/spectral.hpp"
#include "sirlab/ssa.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace sirlab;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr double kStudyHorizon = 5.0;

ModelParams standard_params() {
    ModelParams p;
    p.beta = SpatialFunction::constant(1.5);
    p.alpha = SpatialFunction::constant(1.0);
    p.mu_S = p.mu_I = p.mu_R = 0.1;
    return p;
}

InitialData standard_initial(int dim) {
    SpatialFunction::GaussianBump bump;
    bump.dim = dim;
    bump.center = {0.3, 0.3, 0.3};
    bump.width = 0.1;
    bump.peak = 0.2;
    InitialData d;
    d.s0 = SpatialFunction::constant(1.0);
    d.i0 = SpatialFunction(bump);
    return d.scaled(1.0 / d.total_mass(dim));
}

ExperimentPlan standard_plan(ExperimentKind kind) {
    ExperimentPlan plan;
    plan.kind = kind;
    plan.params = standard_params();
    plan.initial = standard_initial(1);
    plan.dim = 1;
    plan.horizon = kStudyHorizon;
    plan.seed = kSeed;
    plan.threads = resolve_threads(0);
    return plan;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string column(const std::vector<ReportRow>& rows) {
    std::string s;
    for (const auto& r : rows) s += (s.empty() ? "" : " > ") + sci(r.mean_error);
    return s;
}

bool strictly_decreasing(const std::vector<ReportRow>& rows) {
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (!(rows[k].mean_error < rows[k - 1].mean_error)) return false;
    return !rows.empty();
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        o.pass = false;
        o.detail += "; runtime over " + sci(budget_s) + " s";
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d %-34s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

Outcome spectral_exactness() {
    const GridSpec g = GridSpec::build(2, 8);
    const SpectralBasis b(g);
    double gram = 0.0, eig = 0.0, law = 0.0;
    for (std::size_t j = 0; j < b.n_modes(); ++j) {
        for (std::size_t k = j; k < b.n_modes(); ++k)
            gram = std::max(gram, std::abs(inner(b.basis(j), b.basis(k)) - (j == k ? 1.0 : 0.0)));
        const Field lf = discrete_laplacian(b.basis(j));
        for (std::size_t i = 0; i < lf.size(); ++i) eig = std::max(eig, std::abs(lf[i] + b.eigenvalue(j) * b.basis(j)[i]));
    }
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(1.0 + 0.37 * i) + 0.5 * std::cos(0.11 * i * i);
    for (double t : {0.0, 0.01, 0.1}) {
        for (double s : {0.0, 0.05, 0.3}) {
            const Field a = b.apply_semigroup(b.apply_semigroup(f, s, 0.1), t, 0.1);
            const Field c = b.apply_semigroup(f, t + s, 0.1);
            for (std::size_t i = 0; i < f.size(); ++i) law = std::max(law, std::abs(a[i] - c[i]));
        }
    }
    return {gram <= 1e-12 && eig <= 1e-10 && law <= 1e-10,
            "gram " + sci(gram) + ", eigen " + sci(eig) + ", semigroup " + sci(law)};
}

Outcome eigenvalue_limit() {
    double worst = 0.0;
    for (int m = 1; m <= 3; ++m) {
        const ModeIndex idx(1, {m, 0, 0});
        const double lam = std::numbers::pi * std::numbers::pi * m * m;
        worst = std::max(worst, std::abs(eig_discrete(idx, 128) - lam) / lam);
    }
    return {worst <= 0.01, "max relative gap " + sci(worst)};
}

Outcome conservation() {
    const GridSpec g = GridSpec::build(2, 8);
    const PatchState x0 = project_initial(standard_initial(2), g);
    IntegratorOptions o;
    o.dt = 1e-3;
    o.sample_intervals = 100;
    const Trajectory rk = integrate_rk4(standard_params(), x0, 10.0, o);
    const Trajectory ex = integrate_exponential(standard_params(), x0, 10.0, o);
    double drift = 0.0, low = 0.0, gap = 0.0;
    const double m0 = mass(x0);
    for (std::size_t k = 0; k < rk.size(); ++k) {
        drift = std::max({drift, std::abs(mass(rk.states[k]) - m0), std::abs(mass(ex.states[k]) - m0)});
        low = std::min({low, min_component(rk.states[k]), min_component(ex.states[k])});
        gap = std::max(gap, sup_norm_triple(difference(rk.states[k], ex.states[k])));
    }
    return {drift <= 1e-8 && low >= -1e-9 && gap <= 1e-4,
            "mass drift " + sci(drift) + ", min " + sci(low) + ", RK4 vs exponential " + sci(gap)};
}

Outcome mesh_study() {
    ExperimentPlan plan = standard_plan(ExperimentKind::DiscretizationStudy);
    plan.schedule = {{8, 0, 0}, {16, 0, 0}, {32, 0, 0}, {64, 0, 0}};
    plan.inv_eps_ref = 256;
    const ExperimentReport r = run_experiment(plan);
    const bool final_ok = r.rows.back().mean_error <= 0.02;
    return {strictly_decreasing(r.rows) && final_ok, "sup errors " + column(r.rows)};
}

Outcome picard_oracle() {
    const GridSpec out = GridSpec::build(1, 128);
    const ModelParams p = standard_params();
    const InitialData init = standard_initial(1);
    PicardOptions po;
    po.sample_intervals = 64;
    const ReferenceSolution spec = solve_reference_spectral(p, init, out, 1.0, po);
    FineMeshOptions fo;
    fo.sample_intervals = 64;
    const ReferenceSolution fine = solve_reference_fine(p, init, out, 1.0, fo);
    double gap = 0.0;
    for (std::size_t k = 0; k < spec.trajectory.size(); ++k)
        gap = std::max(gap, sup_norm_triple(difference(spec.at(k, out), fine.at(k, out))));
    return {gap <= 5e-3, "gap " + sci(gap) + " after " + std::to_string(spec.iterations) + " sweeps"};
}

Outcome ssa_exactness() {
    std::ostringstream os;
    bool ok = true;

    // Conservation over 10^7 events.
    {
        const GridSpec g = GridSpec::build(2, 16);
        Rng rng(kSeed);
        CountsState st = sample_initial(1000, g, standard_initial(2), rng);
        RateIndex idx(st, standard_params());
        const Count total = st.total;
        std::uint64_t events = 0;
        bool conserved = true;
        while (events < 10'000'000) {
            if (!step(st, idx, rng)) break;
            ++events;
            if ((events & 0xFFFFF) == 0) conserved = conserved && st.count_all() == total;
        }
        conserved = conserved && st.count_all() == total && events >= 10'000'000;
        ok = ok && conserved;
        os << events << " events " << (conserved ? "conserved" : "NOT conserved");
    }

    // Frozen-state channel groups against their rate shares.
    {
        const GridSpec g = GridSpec::build(2, 4);
        Rng init_rng(kSeed + 1);
        const CountsState st = sample_initial(30, g, standard_initial(2), init_rng);
        ModelParams p = standard_params();
        p.mu_S = 0.01;
        p.mu_I = 0.02;
        p.mu_R = 0.005;
        const RateIndex idx(st, p);
        std::array<double, 5> share{};
        for (const auto& ch : idx.channels(st))
            share[ch.kind == ChannelKind::Migration ? 2 + ch.compartment : static_cast<int>(ch.kind)] += ch.rate;
        const int draws = 1'000'000;
        std::array<double, 5> hits{};
        Rng rng(kSeed + 2);
        for (int n = 0; n < draws;) {
            const auto ev = idx.select(st, rng.uniform() * idx.total_rate());
            if (!ev) continue;
            ++hits[ev->kind == ChannelKind::Migration ? 2 + ev->compartment : static_cast<int>(ev->kind)];
            ++n;
        }
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double pr = share[k] / idx.total_rate();
            const double se = std::sqrt(draws * pr * (1 - pr));
            if (se > 0) worst = std::max(worst, std::abs(hits[k] - draws * pr) / se);
        }
        ok = ok && worst <= 3.0;
        os << ", channel groups max " << sci(worst) << " stderr";
    }

    // Death process on one site.
    {
        ModelParams p;
        p.alpha = SpatialFunction::constant(1.0);
        InitialData d;
        d.s0 = SpatialFunction::constant(0.0);
        d.i0 = SpatialFunction::constant(1.0);
        SimOptions so;
        so.initial_mode = InitialMode::Rounded;
        const Count N = 200;
        const int reps = 4000;
        double m = 0.0, m2 = 0.0;
        for (int r = 0; r < reps; ++r) {
            const auto out = simulate(N, p, d, GridSpec::build(1, 1), 1.0, {1.0}, replica_seed(kSeed, 99, r), so);
            const double x = out.states[0].i[0] * N;
            m += x;
            m2 += x * x;
        }
        m /= reps;
        const double se = std::sqrt((m2 / reps - m * m) * reps / (reps - 1) / reps);
        const double z = std::abs(m - N * std::exp(-1.0)) / se;
        ok = ok && z <= 3.0;
        os << ", death mean " << sci(z) << " stderr off";
    }
    return {ok, os.str()};
}

ExperimentReport lln_report;
unsigned lln_report_threads = 0;

Outcome fixed_eps_lln() {
    ExperimentPlan plan = standard_plan(ExperimentKind::FixedEpsLLN);
    plan.schedule = {{8, 100, 50}, {8, 1000, 50}, {8, 10000, 50}};
    lln_report = run_experiment(plan);
    lln_report_threads = plan.threads;
    const double slope = lln_report.slope.value_or(NAN);
    const bool window = std::abs(slope + 0.5) <= 0.15;
    return {strictly_decreasing(lln_report.rows),
            "errors " + column(lln_report.rows) + ", slope " + sci(slope) + (window ? " (in window)" : " (outside window)")};
}

Outcome joint_lln() {
    ExperimentPlan plan = standard_plan(ExperimentKind::JointSupNormLLN);
    plan.schedule = {{4, 200, 50}, {8, 800, 50}, {16, 3200, 50}};
    const ExperimentReport r = run_experiment(plan);
    return {strictly_decreasing(r.rows), "errors " + column(r.rows) + " (reference 1/" + std::to_string(r.inv_eps_ref) + ")"};
}

Outcome martingale() {
    ExperimentPlan plan = standard_plan(ExperimentKind::MartingaleDecay);
    plan.schedule = {{8, 100, 200}, {8, 1000, 200}, {8, 10000, 200}};
    plan.sample_intervals = 256;
    const ExperimentReport r = run_experiment(plan);
    const double slope = r.slope.value_or(NAN);
    int bad = 0;
    for (const auto& c : r.mean_checks) bad += c.within_3_stderr ? 0 : 1;
    return {std::abs(slope + 0.5) <= 0.15 && bad == 0,
            "errors " + column(r.rows) + ", slope " + sci(slope) + ", " + std::to_string(r.mean_checks.size() - bad) + "/" +
                std::to_string(r.mean_checks.size()) + " mean checks within 3 stderr"};
}

Outcome determinism() {
    ExperimentPlan plan = standard_plan(ExperimentKind::FixedEpsLLN);
    plan.schedule = {{8, 100, 50}, {8, 1000, 50}, {8, 10000, 50}};
    plan.threads = lln_report_threads == 4 ? 1 : 4;
    const std::string a = report_csv(run_experiment(plan));
    const std::string b = report_csv(lln_report);
    ExperimentPlan mart = standard_plan(ExperimentKind::MartingaleDecay);
    mart.schedule = {{4, 100, 12}, {4, 400, 12}};
    mart.sample_intervals = 256;
    mart.threads = 1;
    const ExperimentReport m1 = run_experiment(mart);
    mart.threads = 4;
    const ExperimentReport m4 = run_experiment(mart);
    const bool same = a == b && report_csv(m1) == report_csv(m4) && mean_checks_csv(m1) == mean_checks_csv(m4);
    return {same && !lln_report.rows.empty(),
            std::string(same ? "identical" : "DIFFERENT") + " CSV bytes across reruns and thread counts (hash " +
                hash_hex(fnv1a(a)) + ")"};
}

Outcome throughput() {
    const GridSpec g = GridSpec::build(2, 16);
    Rng rng(kSeed + 3);
    CountsState st = sample_initial(1000, g, standard_initial(2), rng);
    RateIndex idx(st, standard_params());
    // Warm up, then time a fixed event budget.
    for (int k = 0; k < 200000; ++k) step(st, idx, rng);
    const std::uint64_t events = 5'000'000;
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t done = 0;
    while (done < events && step(st, idx, rng)) ++done;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rate = done / secs;
    return {done == events && rate >= 5e6, sci(rate) + " events/s single-threaded"};
}

}  // namespace

int main() {
    std::printf("sirlab acceptance (seed %llu, worker threads %u)\n", static_cast<unsigned long long>(kSeed),
                resolve_threads(0));
    criterion(1, "spectral exactness", 5, spectral_exactness);
    criterion(2, "eigenvalue limit", 1, eigenvalue_limit);
    criterion(3, "conservation and positivity", 30, conservation);
    criterion(4, "mesh refinement study", 120, mesh_study);
    criterion(5, "Picard oracle agreement", 60, picard_oracle);
    criterion(6, "SSA exactness", 120, ssa_exactness);
    criterion(7, "fixed-mesh LLN", 300, fixed_eps_lln);
    criterion(8, "joint sup-norm LLN", 600, joint_lln);
    criterion(9, "martingale decay", 600, martingale);
    criterion(10, "determinism", 0, determinism);
    criterion(11, "SSA throughput", 0, throughput);
    std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
