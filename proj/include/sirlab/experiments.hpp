#pragma once

// Convergence experiments: mesh refinement of the deterministic model, the
// fixed-mesh and joint law of large numbers for the stochastic model, and the
// decay of the compensated martingale.
//
// Replica seeds: row j, replica r uses key Rng::derive(Rng::derive(seed, j), r).
// Replicas run on a task pool and results are merged by (row, replica) index,
// so reports do not depend on the thread count.

#include "sirlab/model.hpp"
#include "sirlab/pde_reference.hpp"
#include "sirlab/ssa.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sirlab {

enum class ExperimentKind { DiscretizationStudy, FixedEpsLLN, JointSupNormLLN, MartingaleDecay };

std::string_view to_string(ExperimentKind kind);

struct ScheduleEntry {
    int inv_eps = 1;
    Count N = 1;
    int replicas = 1;
};

struct ExperimentPlan {
    ExperimentKind kind = ExperimentKind::FixedEpsLLN;
    ModelParams params;
    InitialData initial;
    int dim = 1;
    Boundary boundary = Boundary::Neumann;
    double horizon = 1.0;
    /// DiscretizationStudy uses only inv_eps of each entry.
    std::vector<ScheduleEntry> schedule;
    /// Reference mesh for DiscretizationStudy and JointSupNormLLN.
    int inv_eps_ref = 0;
    std::uint64_t seed = 0;
    /// Sup over time is taken over sample_intervals + 1 uniform times.
    int sample_intervals = 64;
    InitialMode initial_mode = InitialMode::Multinomial;
    CompensatorQuadrature quadrature = CompensatorQuadrature::Trapezoid;
    FineMeshOptions integration;
    unsigned threads = 1;
};

/// Throws std::invalid_argument describing the first violation, including any
/// break of strict N / log(1/eps) growth along a JointSupNormLLN schedule.
void validate_plan(const ExperimentPlan& plan);

/// Strictly increasing N / log(1/eps) along the schedule (eps < 1 everywhere).
bool supnorm_schedule_ok(const std::vector<ScheduleEntry>& schedule, std::string* why = nullptr);

struct ReportRow {
    int inv_eps = 1;
    double eps = 1.0;
    Count N = 0;
    int replicas = 0;
    double mean_error = 0.0;
    double stderr_error = 0.0;
};

/// Replica mean of a compartment aggregate of M at one checkpoint.
struct MeanZeroCheck {
    Count N = 0;
    double t = 0.0;
    int compartment = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    bool within_3_stderr = true;
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::FixedEpsLLN;
    std::vector<ReportRow> rows;
    /// Populated for DiscretizationStudy.
    DiscretizationStudy study;
    /// Least-squares log-log slope of mean error against N (or eps for the mesh study).
    std::optional<double> slope;
    std::vector<MeanZeroCheck> mean_checks;
    std::uint64_t seed = 0;
    int sample_intervals = 0;
    int inv_eps_ref = 0;
    double dt = 0.0;
};

ExperimentReport run_discretization_study(const ExperimentPlan& plan);
ExperimentReport run_fixed_eps_lln(const ExperimentPlan& plan);
ExperimentReport run_joint_supnorm_lln(const ExperimentPlan& plan);
ExperimentReport run_martingale_decay(const ExperimentPlan& plan);
/// Dispatch on plan.kind.
ExperimentReport run_experiment(const ExperimentPlan& plan);

std::uint64_t replica_seed(std::uint64_t base, std::size_t row, std::size_t replica);

/// Least-squares slope of log(y) against log(x); nullopt with fewer than two
/// points or any nonpositive value.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct Verdict {
    bool pass = true;
    std::string detail;
};

struct AcceptanceThresholds {
    /// Mesh study: final sup error bound.
    double final_error = 0.02;
    /// Slope target and tolerance (LLN slope is informational; martingale slope is gated).
    double slope_target = -0.5;
    double slope_tolerance = 0.15;
};

/// Strictly decreasing error column, plus the kind-specific extras: final error
/// bound for the mesh study, slope window and mean-zero checks for the martingale.
Verdict evaluate(const ExperimentReport& report, const AcceptanceThresholds& thresholds = {});

}  // namespace sirlab
