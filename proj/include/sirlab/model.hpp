#pragma once

// Model data shared by the deterministic and stochastic solvers: spatial rate
// functions, diffusivities, and the (S, I, R) density triple on a grid.

#include "sirlab/grid.hpp"

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace sirlab {

/// Built-in nonnegative functions on [0,1]^d.
class SpatialFunction {
public:
    struct Constant {
        double value = 0.0;
    };
    /// base + peak * exp(-|x - center|^2 / (2 width^2)), distance over the first `dim` axes.
    struct GaussianBump {
        int dim = 1;
        Point center{0.5, 0.5, 0.5};
        double width = 0.1;
        double base = 0.0;
        double peak = 1.0;
    };
    /// Piecewise constant on a uniform raster of inv_eps^dim cells (axis 0 fastest).
    struct Raster {
        int dim = 1;
        int inv_eps = 1;
        std::vector<double> values;
    };
    using Spec = std::variant<Constant, GaussianBump, Raster>;

    SpatialFunction() : spec_(Constant{0.0}) {}
    SpatialFunction(Spec spec);  // NOLINT(google-explicit-constructor)

    static SpatialFunction constant(double value) { return SpatialFunction(Constant{value}); }

    double operator()(const Point& x) const;
    /// Upper bound of the function on D (exact for the built-ins when the bump center lies in D).
    double sup() const;
    bool is_constant() const noexcept { return std::holds_alternative<Constant>(spec_); }
    /// Number of axes the function depends on (0 for constants).
    int dim() const noexcept;
    const Spec& spec() const noexcept { return spec_; }
    SpatialFunction scaled(double factor) const;
    std::string describe() const;

private:
    Spec spec_;
};

struct ModelParams {
    SpatialFunction beta = SpatialFunction::constant(0.0);
    SpatialFunction alpha = SpatialFunction::constant(0.0);
    double mu_S = 0.0;
    double mu_I = 0.0;
    double mu_R = 0.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    std::array<double, 3> mu() const noexcept { return {mu_S, mu_I, mu_R}; }
    double mu_max() const noexcept;
    double beta_bar() const { return beta.sup(); }
    double alpha_bar() const { return alpha.sup(); }
};

/// Continuous initial densities (s0, i0, r0).
struct InitialData {
    SpatialFunction s0 = SpatialFunction::constant(1.0);
    SpatialFunction i0 = SpatialFunction::constant(0.0);
    SpatialFunction r0 = SpatialFunction::constant(0.0);

    /// int_D (s0 + i0 + r0), by Gauss quadrature on a 64^d (d < 3) or 32^3 cell partition.
    double total_mass(int dim) const;
    InitialData scaled(double factor) const;
};

/// beta and alpha sampled at cell centers.
struct SiteRates {
    std::vector<double> beta;
    std::vector<double> alpha;
};
SiteRates sample_rates(const ModelParams& params, const GridSpec& grid);

struct PatchState {
    Field s;
    Field i;
    Field r;

    PatchState() = default;
    explicit PatchState(const GridSpec& grid) : s(grid), i(grid), r(grid) {}
    PatchState(Field s_, Field i_, Field r_);

    const GridSpec& grid() const noexcept { return s.grid(); }
    Field& component(int c) { return c == 0 ? s : (c == 1 ? i : r); }
    const Field& component(int c) const { return c == 0 ? s : (c == 1 ? i : r); }

    friend bool operator==(const PatchState&, const PatchState&) = default;
};

/// eps^d sum_i (s + i + r)
double mass(const PatchState& x);
/// ||s||_inf + ||i||_inf + ||r||_inf
double sup_norm_triple(const PatchState& x);
/// sum of |entries| over all three components (the l1 norm of the stacked vector)
double l1_norm(const PatchState& x);
double min_component(const PatchState& x);
PatchState difference(const PatchState& a, const PatchState& b);

/// Assumption-style initial state: P_eps applied to each density.
PatchState project_initial(const InitialData& data, const GridSpec& grid, int quad_order = 5);

struct Trajectory {
    std::vector<double> times;
    std::vector<PatchState> states;

    void push(double t, PatchState state);
    std::size_t size() const noexcept { return times.size(); }
    const PatchState& back() const { return states.back(); }
};

/// k * horizon / intervals for k = 0..intervals.
std::vector<double> uniform_times(double horizon, int intervals);

}  // namespace sirlab
