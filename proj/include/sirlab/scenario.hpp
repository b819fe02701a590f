#pragma once

// Scenario files: versioned JSON describing grid, rates, initial densities,
// horizon, sampling, and optional stochastic / study settings.
//
// Spatial functions are written as a bare number (constant) or an object:
//   {"type": "constant", "value": v}
//   {"type": "gaussian", "center": [..d..], "width": w, "base": b, "peak": p}
//   {"type": "raster", "values": [..inv_eps^d..]}   (raster uses "inv_eps" too)
// Unknown keys anywhere are rejected.

#include "sirlab/experiments.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/model.hpp"
#include "sirlab/pde_reference.hpp"
#include "sirlab/ssa.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sirlab {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct StudyConfig {
    std::vector<int> inv_eps_list;
    int inv_eps_ref = 0;
    std::vector<Count> N_list;
    std::vector<ScheduleEntry> schedule;
    int replicas = 50;
    int martingale_replicas = 200;
    int dense_count = 256;
    CompensatorQuadrature quadrature = CompensatorQuadrature::Trapezoid;
    AcceptanceThresholds thresholds;
};

struct Scenario {
    std::string name;
    GridSpec grid;
    ModelParams params;
    /// Already normalized to unit mass.
    InitialData initial;
    /// Factor applied to (s0, i0, r0) by the loader.
    double normalization_factor = 1.0;
    double horizon = 1.0;
    /// Sample times are k * horizon / sample_count, k = 0..sample_count.
    int sample_count = 64;
    bool dense = false;
    Count N = 1000;
    InitialMode initial_mode = InitialMode::Multinomial;
    FineMeshOptions integration;
    StudyConfig study;
    /// FNV-1a of the canonical (key-sorted, compact) JSON text.
    std::uint64_t hash = 0;
    /// Canonical JSON text; parses back to the same scenario.
    std::string canonical;
};

Scenario parse_scenario(std::string_view text, std::string_view source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

std::string hash_hex(std::uint64_t hash);
std::uint64_t fnv1a(std::string_view bytes);

/// Multi-line human summary.
std::string describe(const Scenario& scenario);

/// Plan for one study kind from the scenario's study block. `replicas` > 0
/// overrides the scenario's replica count.
ExperimentPlan make_plan(const Scenario& scenario, ExperimentKind kind, std::uint64_t seed, int replicas,
                         unsigned threads);

}  // namespace sirlab
