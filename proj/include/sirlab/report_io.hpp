#pragma once

// Result persistence. Every writer returns the file body as a string so callers
// can hash it before it hits the disk.
//
// CSV column orders (fixed):
//   trajectory   t,site_index,s,i,r
//   ssa          t,site_index,s,i,r,replica_id,event_count
//   study        eps,sup_error_S,sup_error_I,sup_error_R,sup_error_total
//   report       inv_eps,eps,N,replicas,mean_error,stderr_error
//   mean checks  N,t,compartment,mean,stderr_mean,within_3_stderr
// Numbers use the shortest round-trip decimal form, so output is byte-stable.

#include "sirlab/experiments.hpp"
#include "sirlab/model.hpp"
#include "sirlab/pde_reference.hpp"
#include "sirlab/ssa.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sirlab {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

std::string format_number(double x);

std::string trajectory_csv(const Trajectory& traj);
std::string ssa_csv(const SimOutput& out, int replica_id = 0);
std::string study_csv(const DiscretizationStudy& study);
std::string report_csv(const ExperimentReport& report);
std::string mean_checks_csv(const ExperimentReport& report);

/// Mass and sup norms per sample time.
std::string trajectory_json(const Trajectory& traj, std::string_view scenario_hash, std::string_view route);
/// Per-sample event counts, the run seed and final conservation numbers.
std::string ssa_json(const SimOutput& out, std::string_view scenario_hash);
/// Rows, slope, mean checks, acceptance verdict and run metadata.
std::string report_json(const ExperimentReport& report, const Verdict& verdict, std::string_view scenario_hash);

struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    SvgSeries data;
    /// Dashed guide line of this slope through the first data point.
    std::optional<double> guide_slope;
};

/// Static log-log chart: polyline plus point markers, labeled axes with decade ticks.
std::string loglog_svg(const SvgPlot& plot);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header name; throws std::out_of_range if absent.
    std::size_t column(std::string_view name) const;
    /// Column parsed as doubles; throws std::invalid_argument on a malformed cell.
    std::vector<double> numbers(std::string_view name) const;
};

/// Plain comma-separated text, no quoting; throws std::invalid_argument on ragged rows.
CsvTable parse_csv(std::string_view text);

struct ManifestFile {
    std::string name;
    std::string hash;
    std::size_t bytes = 0;
};

/// Everything needed to regenerate the outputs of one CLI run.
struct RunManifest {
    std::string command;
    std::string scenario_hash;
    /// Canonical scenario JSON text, so a replay does not depend on the original file.
    std::string scenario_text;
    std::uint64_t seed = 0;
    int replicas = 0;
    unsigned threads = 1;
    std::vector<std::string> formats;
    /// Seeds in (row, replica) order.
    std::vector<std::vector<std::uint64_t>> replica_seeds;
    std::string started_utc;
    std::string finished_utc;
    double wall_seconds = 0.0;
    std::vector<ManifestFile> outputs;
};

std::string manifest_json(const RunManifest& manifest);
/// Throws std::invalid_argument on a malformed manifest.
RunManifest parse_manifest(std::string_view text);

/// Writes `body` to `path` and returns its inventory entry (FNV-1a hash in hex).
ManifestFile write_output(const std::filesystem::path& dir, const std::string& name, const std::string& body);

std::string utc_timestamp();

}  // namespace sirlab
