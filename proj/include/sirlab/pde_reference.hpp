#pragma once

// Reference solutions of the reaction-diffusion limit and the mesh-refinement
// study built on them.
//
// Two independent routes:
//   * FineMesh: the patch ODE on a fine lattice, projected initial data.
//   * SpectralPicard: fixed-point iteration of the mild form in a truncated
//     continuous cosine basis (constant coefficients only).
// Both report their trajectory as cell averages on a lattice so they can be
// compared with coarser patch solutions by exact aggregation.

#include "sirlab/grid.hpp"
#include "sirlab/model.hpp"
#include "sirlab/patch_ode.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sirlab {

/// Average of `fine` over each coarse cell. Requires fine.grid().refines(coarse).
Field restrict_to(const Field& fine, const GridSpec& coarse);
PatchState restrict_to(const PatchState& fine, const GridSpec& coarse);

enum class ReferenceRoute { FineMesh, SpectralPicard };

enum class IntegratorKind {
    /// Exponential on Neumann grids, RK4 otherwise.
    Auto,
    RK4,
    Exponential,
};

struct ReferenceSolution {
    ReferenceRoute route = ReferenceRoute::FineMesh;
    /// Cell averages on the reference lattice at the comparison times.
    Trajectory trajectory;
    GridSpec grid;
    /// Requested step of the fine-mesh integrator (0 = scheme default).
    double dt = 0.0;

    // SpectralPicard only.
    int truncation = 0;
    int iterations = 0;
    /// ||u_n - u_{n-1}|| for n = 1..iterations (time-max of the coefficient l2 norm).
    std::vector<double> residuals;
    /// Initial-data energy outside the retained modes, sum over components.
    double tail_energy = 0.0;

    /// Reference state at sample k, aggregated to `coarse`.
    PatchState at(std::size_t k, const GridSpec& coarse) const;
};

struct FineMeshOptions {
    IntegratorKind integrator = IntegratorKind::Auto;
    double dt = 0.0;
    /// Comparison grid: sample_intervals + 1 uniform times including 0 and T.
    int sample_intervals = 64;
    int quad_order = 5;
};

/// Patch-ODE solution at eps_ref with P_eps-projected initial data.
ReferenceSolution solve_reference_fine(const ModelParams& params, const InitialData& initial, const GridSpec& grid,
                                       double horizon, const FineMeshOptions& options = {});

struct PicardOptions {
    /// Retain modes with every m_j <= truncation; 0 selects 4 * output inv_eps.
    int truncation = 0;
    /// Upper bound on Picard sweeps.
    int max_iterations = 60;
    /// Stop once the residual falls to this level.
    double tolerance = 1e-13;
    /// Uniform time nodes: time_intervals + 1 points, a multiple of sample_intervals.
    int time_intervals = 256;
    int sample_intervals = 64;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mild-form fixed point in the truncated continuous cosine basis. The
/// convolution is integrated exactly against a piecewise-linear interpolant of
/// the reaction term on the time nodes. Requires constant beta, alpha and a
/// Neumann output grid; the trajectory holds exact cell averages on `output`.
/// Throws ConvergenceError when the residual stops decreasing after sweep 5.
ReferenceSolution solve_reference_spectral(const ModelParams& params, const InitialData& initial,
                                           const GridSpec& output, double horizon,
                                           const PicardOptions& options = {});

struct DiscretizationRow {
    int inv_eps = 0;
    double eps = 0.0;
    double sup_error_S = 0.0;
    double sup_error_I = 0.0;
    double sup_error_R = 0.0;
    /// time-max of sup_norm_triple(X_eps - X); not the sum of the three columns.
    double sup_error_total = 0.0;
};

struct DiscretizationStudy {
    std::vector<DiscretizationRow> rows;
    int inv_eps_ref = 0;
    double dt = 0.0;
    int sample_intervals = 0;
};

struct StudyOptions {
    FineMeshOptions integration;
    unsigned threads = 1;
};

/// For each mesh in inv_eps_list: solve at that mesh, aggregate the reference to
/// it, and take the max over the shared sample times of the sup-norm difference.
/// Every mesh must be nested in the reference lattice.
DiscretizationStudy discretization_study(const ModelParams& params, const InitialData& initial, int dim,
                                         Boundary boundary, double horizon, const std::vector<int>& inv_eps_list,
                                         int inv_eps_ref, const StudyOptions& options = {});

/// Error of one coarse trajectory against a reference sampled at the same times.
DiscretizationRow compare_to_reference(const Trajectory& coarse, const ReferenceSolution& reference);

}  // namespace sirlab
