#pragma once

// Deterministic patch model dX/dt = diag(mu) Delta_eps X + G(x; X) and two
// independent time integrators for it.

#include "sirlab/grid.hpp"
#include "sirlab/model.hpp"
#include "sirlab/spectral.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace sirlab {

struct ReactionTerms {
    double ds;
    double di;
    double dr;
};

/// G with the regularized incidence g+(u,v,w) = u+ v+ / (u+ + v+ + w+) (0 when the sum vanishes).
ReactionTerms reaction_G(double beta, double alpha, double u, double v, double w);
ReactionTerms reaction_G(const ModelParams& params, const Point& x, double u, double v, double w);

/// Right-hand side evaluator bound to one grid; reusable across steps.
class PatchSystem {
public:
    PatchSystem(const ModelParams& params, const GridSpec& grid);

    const GridSpec& grid() const noexcept { return grid_; }
    const ModelParams& params() const noexcept { return params_; }
    const SiteRates& rates() const noexcept { return rates_; }

    /// out = diffusion + reaction
    void rhs(const PatchState& x, PatchState& out) const;
    /// out += G(X) only
    void add_reaction(const PatchState& x, PatchState& out) const;
    /// out += diag(mu) Delta_eps X only
    void add_diffusion(const PatchState& x, PatchState& out) const;

private:
    ModelParams params_;
    GridSpec grid_;
    SiteRates rates_;
};

/// Tangent Delta~ X + G(X). Autonomous, so `t` is unused.
PatchState rhs(const ModelParams& params, const PatchState& x, double t = 0.0);

enum class LawsonScheme {
    /// X_{k+1} = T~(dt) [X_k + dt G(X_k)]
    Euler,
    /// Classical RK4 applied in the frame moving with T~, fourth order in dt.
    RK4,
};

struct IntegratorOptions {
    /// Requested step. 0 selects the scheme default.
    double dt = 0.0;
    /// Record k T / sample_intervals for k = 0..sample_intervals; the step is
    /// shrunk so samples land on step boundaries. 0 records every step.
    int sample_intervals = 0;
    /// Skip the diffusion stability check of the explicit scheme.
    bool allow_unstable = false;
    /// Abort when any component drops below -undershoot_tolerance.
    double undershoot_tolerance = 1e-9;
    /// Exponential integrator only.
    LawsonScheme lawson = LawsonScheme::RK4;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::size_t step, double time)
        : std::runtime_error(what), step_(step), time_(time) {}
    std::size_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    std::size_t step_;
    double time_;
};

/// eps^2 / (4 d mu_max); +inf without diffusion.
double rk4_stability_limit(const ModelParams& params, const GridSpec& grid);
/// min(1e-2, eps^2 / (8 d mu_max))
double default_rk4_dt(const ModelParams& params, const GridSpec& grid);
inline constexpr double kDefaultExponentialDt = 1e-2;

/// Classical 4th-order Runge-Kutta.
Trajectory integrate_rk4(const ModelParams& params, const PatchState& x0, double horizon,
                         const IntegratorOptions& options = {});

/// Lawson (mild-form) stepping: diffusion is applied exactly through the cosine eigenbasis and
/// only the reaction is discretized. Neumann grids only.
Trajectory integrate_exponential(const ModelParams& params, const PatchState& x0, double horizon,
                                 const IntegratorOptions& options = {});

}  // namespace sirlab
