#include "sirlab/experiments.hpp"

#include "sirlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sirlab {

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::DiscretizationStudy: return "discretization-study";
        case ExperimentKind::FixedEpsLLN: return "fixed-eps-lln";
        case ExperimentKind::JointSupNormLLN: return "joint-supnorm-lln";
        case ExperimentKind::MartingaleDecay: return "martingale-decay";
    }
    return "unknown";
}

std::uint64_t replica_seed(std::uint64_t base, std::size_t row, std::size_t replica) {
    return Rng::derive(Rng::derive(base, row), replica);
}

bool supnorm_schedule_ok(const std::vector<ScheduleEntry>& schedule, std::string* why) {
    double previous = -1.0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const ScheduleEntry& e = schedule[k];
        if (e.inv_eps < 2) {
            if (why) *why = "entry " + std::to_string(k) + ": eps must be < 1 so that log(1/eps) > 0";
            return false;
        }
        const double ratio = static_cast<double>(e.N) / std::log(static_cast<double>(e.inv_eps));
        if (k > 0 && !(ratio > previous)) {
            if (why) {
                std::ostringstream os;
                os << "entry " << k << " (eps=1/" << e.inv_eps << ", N=" << e.N << "): N/log(1/eps) = " << ratio
                   << " does not exceed the previous " << previous;
                *why = os.str();
            }
            return false;
        }
        previous = ratio;
    }
    return true;
}

namespace {

int gcd(int a, int b) { return b == 0 ? a : gcd(b, a % b); }

// Smallest common refinement of the schedule meshes that is at least a
// dimension-dependent floor (256, 64, 32 cells per axis).
int default_reference(const ExperimentPlan& plan) {
    int l = 1;
    for (const auto& e : plan.schedule) l = l / gcd(l, e.inv_eps) * e.inv_eps;
    const int floor_cells = plan.dim == 1 ? 256 : (plan.dim == 2 ? 64 : 32);
    return l * std::max(1, (floor_cells + l - 1) / l);
}

int reference_mesh(const ExperimentPlan& plan) {
    return plan.inv_eps_ref > 0 ? plan.inv_eps_ref : default_reference(plan);
}

[[noreturn]] void plan_error(const std::string& what) { throw std::invalid_argument("invalid plan: " + what); }

}  // namespace

void validate_plan(const ExperimentPlan& plan) {
    if (plan.dim < 1 || plan.dim > kMaxDim) plan_error("dimension must be 1, 2 or 3");
    if (!(plan.horizon > 0.0) || !std::isfinite(plan.horizon)) plan_error("horizon must be positive");
    if (plan.schedule.empty()) plan_error("schedule is empty");
    if (plan.sample_intervals < 1) plan_error("sample_intervals must be >= 1");
    plan.params.validate();
    for (std::size_t k = 0; k < plan.schedule.size(); ++k) {
        const auto& e = plan.schedule[k];
        if (e.inv_eps < 1) plan_error("entry " + std::to_string(k) + ": inv_eps must be >= 1");
        if (plan.kind != ExperimentKind::DiscretizationStudy) {
            if (e.N < 1) plan_error("entry " + std::to_string(k) + ": N must be >= 1");
            if (e.replicas < 1) plan_error("entry " + std::to_string(k) + ": replicas must be >= 1");
        }
    }

    const auto same_eps_increasing_n = [&] {
        for (std::size_t k = 1; k < plan.schedule.size(); ++k) {
            if (plan.schedule[k].inv_eps != plan.schedule[0].inv_eps) plan_error("all entries must share one eps");
            if (!(plan.schedule[k].N > plan.schedule[k - 1].N)) plan_error("N must increase strictly");
        }
    };
    const auto nested = [&] {
        const int ref = reference_mesh(plan);
        for (const auto& e : plan.schedule)
            if (ref % e.inv_eps != 0)
                plan_error("mesh 1/" + std::to_string(e.inv_eps) + " is not nested in reference 1/" +
                           std::to_string(ref));
    };

    switch (plan.kind) {
        case ExperimentKind::DiscretizationStudy:
            if (plan.inv_eps_ref < 1) plan_error("the mesh study needs inv_eps_ref");
            nested();
            break;
        case ExperimentKind::FixedEpsLLN:
            same_eps_increasing_n();
            break;
        case ExperimentKind::JointSupNormLLN: {
            std::string why;
            if (!supnorm_schedule_ok(plan.schedule, &why)) plan_error(why);
            nested();
            break;
        }
        case ExperimentKind::MartingaleDecay:
            same_eps_increasing_n();
            if (plan.quadrature == CompensatorQuadrature::Trapezoid &&
                static_cast<std::size_t>(plan.sample_intervals) + 1 < kMinDenseSamples)
                plan_error("martingale decay needs at least " + std::to_string(kMinDenseSamples) + " sample times");
            break;
    }
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) return std::nullopt;
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

namespace {

struct MeanStderr {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

MeanStderr summarize(const double* v, std::size_t n) {
    MeanStderr out;
    if (n == 0) return out;
    for (std::size_t k = 0; k < n; ++k) out.mean += v[k];
    out.mean /= static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (std::size_t k = 0; k < n; ++k) ss += (v[k] - out.mean) * (v[k] - out.mean);
        out.stderr_mean = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return out;
}

// (row, replica) pairs flattened in row-major order.
struct TaskGrid {
    std::vector<std::size_t> offsets;
    std::size_t total = 0;

    explicit TaskGrid(const std::vector<ScheduleEntry>& schedule) {
        for (const auto& e : schedule) {
            offsets.push_back(total);
            total += static_cast<std::size_t>(e.replicas);
        }
    }
    std::pair<std::size_t, std::size_t> locate(std::size_t task) const {
        const auto it = std::upper_bound(offsets.begin(), offsets.end(), task);
        const std::size_t row = static_cast<std::size_t>(it - offsets.begin()) - 1;
        return {row, task - offsets[row]};
    }
};

Trajectory deterministic_limit(const ExperimentPlan& plan, const GridSpec& grid) {
    IntegratorOptions io;
    io.dt = plan.integration.dt;
    io.sample_intervals = plan.sample_intervals;
    const PatchState x0 = project_initial(plan.initial, grid, plan.integration.quad_order);
    const bool exponential = plan.integration.integrator == IntegratorKind::Exponential ||
                             (plan.integration.integrator == IntegratorKind::Auto && grid.boundary() == Boundary::Neumann);
    return exponential ? integrate_exponential(plan.params, x0, plan.horizon, io)
                       : integrate_rk4(plan.params, x0, plan.horizon, io);
}

// Runs every replica, mapping each simulation to a vector of per-replica values.
template <class Reduce>
std::vector<std::vector<double>> run_replicas(const ExperimentPlan& plan, const std::vector<GridSpec>& grids,
                                              bool record_compensator, std::size_t values_per_replica,
                                              Reduce&& reduce) {
    const TaskGrid tasks(plan.schedule);
    const std::vector<double> times = uniform_times(plan.horizon, plan.sample_intervals);
    std::vector<std::vector<double>> results(tasks.total);
    SimOptions options;
    options.initial_mode = plan.initial_mode;
    options.record_compensator = record_compensator;

    parallel_for(tasks.total, plan.threads, [&](std::size_t task) {
        const auto [row, replica] = tasks.locate(task);
        const ScheduleEntry& e = plan.schedule[row];
        const std::uint64_t seed = replica_seed(plan.seed, row, replica);
        try {
            const SimOutput out =
                simulate(e.N, plan.params, plan.initial, grids[row], plan.horizon, times, seed, options);
            results[task] = reduce(row, out);
            if (results[task].size() != values_per_replica) throw std::logic_error("replica reduction size mismatch");
        } catch (const std::exception& ex) {
            std::ostringstream os;
            os << "replica " << replica << " of row " << row << " (eps=1/" << e.inv_eps << ", N=" << e.N
               << ", seed=" << seed << ") failed: " << ex.what();
            throw std::runtime_error(os.str());
        }
    });
    return results;
}

std::vector<GridSpec> schedule_grids(const ExperimentPlan& plan) {
    std::vector<GridSpec> grids;
    for (const auto& e : plan.schedule) grids.push_back(GridSpec::build(plan.dim, e.inv_eps, plan.boundary));
    return grids;
}

ExperimentReport assemble(const ExperimentPlan& plan, const std::vector<std::vector<double>>& results,
                          bool slope_vs_n) {
    ExperimentReport report;
    report.kind = plan.kind;
    report.seed = plan.seed;
    report.sample_intervals = plan.sample_intervals;
    const TaskGrid tasks(plan.schedule);
    std::vector<double> xs, ys;
    for (std::size_t row = 0; row < plan.schedule.size(); ++row) {
        const ScheduleEntry& e = plan.schedule[row];
        std::vector<double> errors;
        for (int r = 0; r < e.replicas; ++r) errors.push_back(results[tasks.offsets[row] + r].front());
        const MeanStderr ms = summarize(errors.data(), errors.size());
        ReportRow out;
        out.inv_eps = e.inv_eps;
        out.eps = 1.0 / e.inv_eps;
        out.N = e.N;
        out.replicas = e.replicas;
        out.mean_error = ms.mean;
        out.stderr_error = ms.stderr_mean;
        report.rows.push_back(out);
        xs.push_back(static_cast<double>(e.N));
        ys.push_back(ms.mean);
    }
    if (slope_vs_n) report.slope = loglog_slope(xs, ys);
    return report;
}

}  // namespace

ExperimentReport run_discretization_study(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.kind != ExperimentKind::DiscretizationStudy) throw std::invalid_argument("plan is not a mesh study");
    std::vector<int> meshes;
    for (const auto& e : plan.schedule) meshes.push_back(e.inv_eps);
    StudyOptions so;
    so.integration = plan.integration;
    so.integration.sample_intervals = plan.sample_intervals;
    so.threads = plan.threads;

    ExperimentReport report;
    report.kind = plan.kind;
    report.seed = plan.seed;
    report.sample_intervals = plan.sample_intervals;
    report.inv_eps_ref = plan.inv_eps_ref;
    report.study = discretization_study(plan.params, plan.initial, plan.dim, plan.boundary, plan.horizon, meshes,
                                        plan.inv_eps_ref, so);
    report.dt = report.study.dt;
    std::vector<double> xs, ys;
    for (const auto& r : report.study.rows) {
        ReportRow row;
        row.inv_eps = r.inv_eps;
        row.eps = r.eps;
        row.mean_error = r.sup_error_total;
        report.rows.push_back(row);
        xs.push_back(r.eps);
        ys.push_back(r.sup_error_total);
    }
    report.slope = loglog_slope(xs, ys);
    return report;
}

ExperimentReport run_fixed_eps_lln(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.kind != ExperimentKind::FixedEpsLLN) throw std::invalid_argument("plan is not a fixed-eps LLN");
    const std::vector<GridSpec> grids = schedule_grids(plan);
    const Trajectory limit = deterministic_limit(plan, grids.front());

    const auto results = run_replicas(plan, grids, false, 1, [&](std::size_t, const SimOutput& out) {
        double worst = 0.0;
        for (std::size_t k = 0; k < out.states.size(); ++k)
            worst = std::max(worst, l1_norm(difference(out.states[k], limit.states[k])));
        return std::vector<double>{worst};
    });
    ExperimentReport report = assemble(plan, results, true);
    report.dt = plan.integration.dt > 0.0 ? plan.integration.dt : kDefaultExponentialDt;
    return report;
}

ExperimentReport run_joint_supnorm_lln(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.kind != ExperimentKind::JointSupNormLLN) throw std::invalid_argument("plan is not a joint LLN");
    const std::vector<GridSpec> grids = schedule_grids(plan);
    const int ref_mesh = reference_mesh(plan);
    FineMeshOptions fo = plan.integration;
    fo.sample_intervals = plan.sample_intervals;
    const ReferenceSolution reference = solve_reference_fine(
        plan.params, plan.initial, GridSpec::build(plan.dim, ref_mesh, plan.boundary), plan.horizon, fo);

    // aggregate the reference once per distinct mesh
    std::vector<std::vector<PatchState>> restricted(grids.size());
    for (std::size_t row = 0; row < grids.size(); ++row)
        for (std::size_t k = 0; k < reference.trajectory.size(); ++k)
            restricted[row].push_back(reference.at(k, grids[row]));

    const auto results = run_replicas(plan, grids, false, 1, [&](std::size_t row, const SimOutput& out) {
        double worst = 0.0;
        for (std::size_t k = 0; k < out.states.size(); ++k)
            worst = std::max(worst, sup_norm_triple(difference(out.states[k], restricted[row][k])));
        return std::vector<double>{worst};
    });
    ExperimentReport report = assemble(plan, results, false);
    report.inv_eps_ref = ref_mesh;
    report.dt = reference.dt;
    return report;
}

ExperimentReport run_martingale_decay(const ExperimentPlan& plan) {
    validate_plan(plan);
    if (plan.kind != ExperimentKind::MartingaleDecay) throw std::invalid_argument("plan is not a martingale study");
    const std::vector<GridSpec> grids = schedule_grids(plan);
    const int K = plan.sample_intervals;
    const std::vector<int> checkpoints = {K / 4, K / 2, (3 * K) / 4, K};
    const std::size_t n_values = 1 + 3 * checkpoints.size();

    const auto results = run_replicas(
        plan, grids, plan.quadrature == CompensatorQuadrature::Exact, n_values, [&](std::size_t, const SimOutput& out) {
            const std::vector<PatchState> m = compensated_martingale(out, plan.params, plan.quadrature);
            std::vector<double> v(n_values, 0.0);
            for (const auto& mk : m) v[0] = std::max(v[0], l1_norm(mk));
            for (std::size_t c = 0; c < checkpoints.size(); ++c) {
                const PatchState& mk = m[static_cast<std::size_t>(checkpoints[c])];
                for (int comp = 0; comp < 3; ++comp) {
                    const auto vals = mk.component(comp).values();
                    v[1 + 3 * c + comp] = std::accumulate(vals.begin(), vals.end(), 0.0);
                }
            }
            return v;
        });

    ExperimentReport report = assemble(plan, results, true);
    const TaskGrid tasks(plan.schedule);
    for (std::size_t row = 0; row < plan.schedule.size(); ++row) {
        const ScheduleEntry& e = plan.schedule[row];
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            for (int comp = 0; comp < 3; ++comp) {
                std::vector<double> samples;
                for (int r = 0; r < e.replicas; ++r) samples.push_back(results[tasks.offsets[row] + r][1 + 3 * c + comp]);
                const MeanStderr ms = summarize(samples.data(), samples.size());
                MeanZeroCheck check;
                check.N = e.N;
                check.t = plan.horizon * checkpoints[c] / K;
                check.compartment = comp;
                check.mean = ms.mean;
                check.stderr_mean = ms.stderr_mean;
                check.within_3_stderr = std::abs(ms.mean) <= 3.0 * ms.stderr_mean || ms.mean == 0.0;
                report.mean_checks.push_back(check);
            }
        }
    }
    return report;
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
    switch (plan.kind) {
        case ExperimentKind::DiscretizationStudy: return run_discretization_study(plan);
        case ExperimentKind::FixedEpsLLN: return run_fixed_eps_lln(plan);
        case ExperimentKind::JointSupNormLLN: return run_joint_supnorm_lln(plan);
        case ExperimentKind::MartingaleDecay: return run_martingale_decay(plan);
    }
    throw std::invalid_argument("unknown experiment kind");
}

Verdict evaluate(const ExperimentReport& report, const AcceptanceThresholds& th) {
    Verdict v;
    std::ostringstream os;
    for (std::size_t k = 1; k < report.rows.size(); ++k) {
        if (!(report.rows[k].mean_error < report.rows[k - 1].mean_error)) {
            v.pass = false;
            os << "error not strictly decreasing at row " << k << " (" << report.rows[k - 1].mean_error << " -> "
               << report.rows[k].mean_error << "); ";
        }
    }
    if (report.kind == ExperimentKind::DiscretizationStudy && !report.rows.empty() &&
        report.rows.back().mean_error > th.final_error) {
        v.pass = false;
        os << "final error " << report.rows.back().mean_error << " exceeds " << th.final_error << "; ";
    }
    if (report.slope) {
        const bool in_window = std::abs(*report.slope - th.slope_target) <= th.slope_tolerance;
        if (report.kind == ExperimentKind::MartingaleDecay && !in_window) {
            v.pass = false;
            os << "slope " << *report.slope << " outside " << th.slope_target << " +/- " << th.slope_tolerance << "; ";
        } else if (report.kind == ExperimentKind::FixedEpsLLN) {
            os << "slope " << *report.slope << (in_window ? " (within" : " (outside") << " the heuristic window); ";
        }
    }
    for (const auto& c : report.mean_checks) {
        if (!c.within_3_stderr) {
            v.pass = false;
            os << "mean of M component " << c.compartment << " at t=" << c.t << " (N=" << c.N << ") is " << c.mean
               << ", beyond 3 x " << c.stderr_mean << "; ";
        }
    }
    v.detail = os.str();
    if (v.detail.size() >= 2) v.detail.resize(v.detail.size() - 2);
    if (v.detail.empty()) v.detail = "ok";
    return v;
}

}  // namespace sirlab
