#include "sirlab/patch_ode.hpp"

#include "sirlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sirlab {

ReactionTerms reaction_G(double beta, double alpha, double u, double v, double w) {
    const double up = std::max(u, 0.0);
    const double vp = std::max(v, 0.0);
    const double wp = std::max(w, 0.0);
    const double denom = up + vp + wp;
    const double g = denom > 0.0 ? up * vp / denom : 0.0;
    return {-beta * g, beta * g - alpha * v, alpha * v};
}

ReactionTerms reaction_G(const ModelParams& params, const Point& x, double u, double v, double w) {
    return reaction_G(params.beta(x), params.alpha(x), u, v, w);
}

PatchSystem::PatchSystem(const ModelParams& params, const GridSpec& grid)
    : params_(params), grid_(grid), rates_(sample_rates(params, grid)) {
    params_.validate();
}

void PatchSystem::add_reaction(const PatchState& x, PatchState& out) const {
    kernels::ReactionBuffers buf{x.s.data(),     x.i.data(),   x.r.data(),   rates_.beta.data(),
                                 rates_.alpha.data(), out.s.data(), out.i.data(), out.r.data()};
    kernels::active().reaction(buf, grid_.n_sites());
}

void PatchSystem::add_diffusion(const PatchState& x, PatchState& out) const {
    add_scaled_laplacian(x.s, params_.mu_S, out.s.values());
    add_scaled_laplacian(x.i, params_.mu_I, out.i.values());
    add_scaled_laplacian(x.r, params_.mu_R, out.r.values());
}

void PatchSystem::rhs(const PatchState& x, PatchState& out) const {
    for (int c = 0; c < 3; ++c) std::fill(out.component(c).values().begin(), out.component(c).values().end(), 0.0);
    add_diffusion(x, out);
    add_reaction(x, out);
}

PatchState rhs(const ModelParams& params, const PatchState& x, double /*t*/) {
    PatchSystem system(params, x.grid());
    PatchState out(x.grid());
    system.rhs(x, out);
    return out;
}

double rk4_stability_limit(const ModelParams& params, const GridSpec& grid) {
    const double mu = params.mu_max();
    if (mu <= 0.0) return std::numeric_limits<double>::infinity();
    return grid.eps() * grid.eps() / (4.0 * grid.dim() * mu);
}

double default_rk4_dt(const ModelParams& params, const GridSpec& grid) {
    return std::min(1e-2, 0.5 * rk4_stability_limit(params, grid));
}

namespace {

struct StepPlan {
    std::size_t steps;
    double dt;
    std::size_t record_every;
    int intervals;
};

StepPlan plan_steps(double horizon, double dt, int intervals) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
    if (intervals < 0) throw std::invalid_argument("sample_intervals must be >= 0");
    StepPlan p{};
    if (intervals > 0) {
        const double per = horizon / intervals;
        const auto sps = static_cast<std::size_t>(std::max(1.0, std::ceil(per / dt - 1e-9)));
        p.steps = sps * static_cast<std::size_t>(intervals);
        p.record_every = sps;
        p.intervals = intervals;
    } else {
        p.steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
        p.record_every = 1;
        p.intervals = static_cast<int>(p.steps);
    }
    p.dt = horizon / static_cast<double>(p.steps);
    return p;
}

void check_state(const PatchState& x, std::size_t step, double t, double tolerance) {
    static const char* names[] = {"S", "I", "R"};
    for (int c = 0; c < 3; ++c) {
        const Field& f = x.component(c);
        for (std::size_t site = 0; site < f.size(); ++site) {
            const double v = f[site];
            if (!std::isfinite(v) || v < -tolerance) {
                std::ostringstream os;
                os << "integration unstable at step " << step << " (t=" << t << "): " << names[c] << "[" << site
                   << "] = " << v;
                throw IntegrationError(os.str(), step, t);
            }
        }
    }
}

void lincomb_state(PatchState& out, const PatchState& x, double a, const PatchState& y) {
    const auto& k = kernels::active();
    for (int c = 0; c < 3; ++c)
        k.lincomb(out.component(c).data(), x.component(c).data(), a, y.component(c).data(), x.s.size());
}

void axpy_state(PatchState& y, double a, const PatchState& x) {
    const auto& k = kernels::active();
    for (int c = 0; c < 3; ++c) k.axpy(y.component(c).data(), a, x.component(c).data(), x.s.size());
}

template <class Step>
Trajectory run(const PatchState& x0, double horizon, const StepPlan& plan, double tolerance, Step&& step) {
    Trajectory traj;
    check_state(x0, 0, 0.0, tolerance);
    traj.push(0.0, x0);
    PatchState x = x0;
    for (std::size_t n = 1; n <= plan.steps; ++n) {
        step(x, plan.dt);
        const double t = horizon * static_cast<double>(n) / static_cast<double>(plan.steps);
        check_state(x, n, t, tolerance);
        if (n % plan.record_every == 0) {
            const std::size_t j = n / plan.record_every;
            traj.push(horizon * static_cast<double>(j) / plan.intervals, x);
        }
    }
    return traj;
}

}  // namespace

Trajectory integrate_rk4(const ModelParams& params, const PatchState& x0, double horizon,
                         const IntegratorOptions& options) {
    const GridSpec& grid = x0.grid();
    const PatchSystem system(params, grid);
    const double dt_req = options.dt > 0.0 ? options.dt : default_rk4_dt(params, grid);
    const StepPlan plan = plan_steps(horizon, dt_req, options.sample_intervals);
    const double limit = rk4_stability_limit(params, grid);
    if (!options.allow_unstable && plan.dt > limit) {
        std::ostringstream os;
        os << "RK4 step " << plan.dt << " exceeds the diffusion stability bound " << limit << " on "
           << grid.describe();
        throw std::invalid_argument(os.str());
    }

    PatchState k1(grid), k2(grid), k3(grid), k4(grid), tmp(grid);
    return run(x0, horizon, plan, options.undershoot_tolerance, [&](PatchState& x, double dt) {
        system.rhs(x, k1);
        lincomb_state(tmp, x, 0.5 * dt, k1);
        system.rhs(tmp, k2);
        lincomb_state(tmp, x, 0.5 * dt, k2);
        system.rhs(tmp, k3);
        lincomb_state(tmp, x, dt, k3);
        system.rhs(tmp, k4);
        axpy_state(x, dt / 6.0, k1);
        axpy_state(x, dt / 3.0, k2);
        axpy_state(x, dt / 3.0, k3);
        axpy_state(x, dt / 6.0, k4);
    });
}

Trajectory integrate_exponential(const ModelParams& params, const PatchState& x0, double horizon,
                                 const IntegratorOptions& options) {
    const GridSpec& grid = x0.grid();
    const PatchSystem system(params, grid);
    const SpectralBasis basis(grid);
    const double dt_req = options.dt > 0.0 ? options.dt : kDefaultExponentialDt;
    const StepPlan plan = plan_steps(horizon, dt_req, options.sample_intervals);

    const std::array<double, 3> mu = params.mu();
    const auto decay_table = [&](double h) {
        std::array<std::vector<double>, 3> table;
        for (int c = 0; c < 3; ++c) {
            table[c].resize(basis.n_modes());
            for (std::size_t m = 0; m < basis.n_modes(); ++m)
                table[c][m] = std::exp(-mu[c] * basis.eigenvalue(m) * h);
        }
        return table;
    };
    const auto full = decay_table(plan.dt);
    const auto half = decay_table(0.5 * plan.dt);

    const auto& kern = kernels::active();
    // x <- T~(h) x, componentwise
    const auto propagate = [&](PatchState& x, const std::array<std::vector<double>, 3>& table) {
        for (int c = 0; c < 3; ++c) {
            if (mu[c] == 0.0) continue;
            std::vector<double> coeffs = basis.analyze(x.component(c));
            kern.multiply(coeffs.data(), table[c].data(), coeffs.size());
            x.component(c) = basis.synthesize(coeffs);
        }
    };
    const auto reaction = [&](const PatchState& x, PatchState& out) {
        for (int c = 0; c < 3; ++c)
            std::fill(out.component(c).values().begin(), out.component(c).values().end(), 0.0);
        system.add_reaction(x, out);
    };

    if (options.lawson == LawsonScheme::Euler) {
        PatchState g(grid);
        return run(x0, horizon, plan, options.undershoot_tolerance, [&](PatchState& x, double dt) {
            reaction(x, g);
            axpy_state(x, dt, g);
            propagate(x, full);
        });
    }

    PatchState k1(grid), k2(grid), k3(grid), k4(grid), ex_half(grid), tmp(grid);
    return run(x0, horizon, plan, options.undershoot_tolerance, [&](PatchState& x, double dt) {
        reaction(x, k1);

        ex_half = x;
        propagate(ex_half, half);  // T(h/2) x

        tmp = k1;
        propagate(tmp, half);
        lincomb_state(tmp, ex_half, 0.5 * dt, tmp);  // T(h/2)(x + h/2 k1)
        reaction(tmp, k2);

        lincomb_state(tmp, ex_half, 0.5 * dt, k2);
        reaction(tmp, k3);

        // T(h) x + h T(h/2) k3
        tmp = k3;
        axpy_state(tmp, 1.0 / dt, ex_half);
        propagate(tmp, half);
        for (int c = 0; c < 3; ++c) kern.scale(tmp.component(c).data(), dt, tmp.component(c).data(), tmp.s.size());
        reaction(tmp, k4);

        // x_new = T(h/2)[ T(h/2)(x + h/6 k1) + h/3 (k2 + k3) ] + h/6 k4
        lincomb_state(tmp, x, dt / 6.0, k1);
        propagate(tmp, half);
        axpy_state(tmp, dt / 3.0, k2);
        axpy_state(tmp, dt / 3.0, k3);
        propagate(tmp, half);
        lincomb_state(x, tmp, dt / 6.0, k4);
    });
}

}  // namespace sirlab
