#include "doctest.h"
#include "support.hpp"

#include "sirlab/patch_ode.hpp"

#include <cmath>

using namespace sirlab;
using sirlab::test::Gen;

namespace {

// Single-population SIR by a plain RK4 loop, the oracle for diffusion-free sites.
std::array<double, 3> sir0d(double beta, double alpha, std::array<double, 3> x, double T, int steps) {
    const auto f = [&](const std::array<double, 3>& y) {
        const double n = y[0] + y[1] + y[2];
        const double g = n > 0 ? beta * y[0] * y[1] / n : 0.0;
        return std::array<double, 3>{-g, g - alpha * y[1], alpha * y[1]};
    };
    const double h = T / steps;
    for (int k = 0; k < steps; ++k) {
        const auto k1 = f(x);
        std::array<double, 3> t;
        for (int c = 0; c < 3; ++c) t[c] = x[c] + 0.5 * h * k1[c];
        const auto k2 = f(t);
        for (int c = 0; c < 3; ++c) t[c] = x[c] + 0.5 * h * k2[c];
        const auto k3 = f(t);
        for (int c = 0; c < 3; ++c) t[c] = x[c] + h * k3[c];
        const auto k4 = f(t);
        for (int c = 0; c < 3; ++c) x[c] += h / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
    }
    return x;
}

double sup_gap(const PatchState& a, const PatchState& b) { return sup_norm_triple(difference(a, b)); }

}  // namespace

TEST_CASE("reaction term uses the regularized incidence and conserves mass") {
    const ReactionTerms t = reaction_G(2.0, 0.5, 0.6, 0.3, 0.1);
    CHECK(t.ds == doctest::Approx(-2.0 * 0.6 * 0.3 / 1.0));
    CHECK(t.di == doctest::Approx(2.0 * 0.18 - 0.15));
    CHECK(t.dr == doctest::Approx(0.15));
    const ReactionTerms z = reaction_G(2.0, 0.5, 0.0, 0.0, 0.0);
    CHECK(z.ds == 0.0);
    CHECK(z.di == 0.0);
    const ReactionTerms neg = reaction_G(2.0, 0.5, -0.1, 0.2, 0.0);
    CHECK(neg.ds == 0.0);

    Gen gen(31);
    for (int k = 0; k < 200; ++k) {
        const ReactionTerms r = reaction_G(gen.uniform(0, 3), gen.uniform(0, 2), gen.uniform(-0.1, 1), gen.uniform(-0.1, 1),
                                           gen.uniform(-0.1, 1));
        CHECK(std::abs(r.ds + r.di + r.dr) <= 1e-15);
    }
}

TEST_CASE("right-hand side conserves total mass on every boundary type") {
    Gen gen(32);
    for (int trial = 0; trial < 20; ++trial) {
        const GridSpec g = gen.grid(3, 8);
        ModelParams p;
        p.beta = SpatialFunction::constant(gen.uniform(0, 3));
        p.alpha = SpatialFunction::constant(gen.uniform(0, 2));
        p.mu_S = gen.uniform(0, 1);
        p.mu_I = gen.uniform(0, 1);
        p.mu_R = gen.uniform(0, 1);
        const PatchState x = gen.density(g);
        CHECK(std::abs(mass(rhs(p, x))) <= 1e-10);
    }
}

TEST_CASE("without diffusion every site follows the single-population model") {
    const GridSpec g = GridSpec::build(1, 6);
    ModelParams p = sirlab::test::standard_params();
    p.mu_S = p.mu_I = p.mu_R = 0.0;
    Gen gen(33);
    const PatchState x0 = gen.density(g);
    IntegratorOptions opt;
    opt.dt = 1e-3;
    const Trajectory rk = integrate_rk4(p, x0, 2.0, opt);
    opt.dt = 1e-2;
    const Trajectory ex = integrate_exponential(p, x0, 2.0, opt);
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        const auto want = sir0d(1.5, 1.0, {x0.s[site], x0.i[site], x0.r[site]}, 2.0, 20000);
        CHECK(rk.back().s[site] == doctest::Approx(want[0]).epsilon(1e-9));
        CHECK(rk.back().i[site] == doctest::Approx(want[1]).epsilon(1e-9));
        CHECK(ex.back().r[site] == doctest::Approx(want[2]).epsilon(1e-7));
    }
}

TEST_CASE("spatially constant data stays constant under Neumann diffusion") {
    const GridSpec g = GridSpec::build(2, 5);
    PatchState x0(Field(g, 0.9), Field(g, 0.1), Field(g, 0.0));
    const Trajectory t = integrate_exponential(sirlab::test::standard_params(), x0, 1.0, {});
    const PatchState& last = t.back();
    for (std::size_t k = 1; k < g.n_sites(); ++k) CHECK(std::abs(last.i[k] - last.i[0]) <= 1e-12);
}

TEST_CASE("both integrators conserve mass, stay nonnegative and agree") {
    for (int dim : {1, 2}) {
        const GridSpec g = GridSpec::build(dim, 8);
        const PatchState x0 = project_initial(sirlab::test::standard_initial(dim), g);
        IntegratorOptions opt;
        opt.dt = 1e-3;
        opt.sample_intervals = 10;
        const Trajectory rk = integrate_rk4(sirlab::test::standard_params(), x0, 3.0, opt);
        const Trajectory ex = integrate_exponential(sirlab::test::standard_params(), x0, 3.0, opt);
        REQUIRE(rk.size() == 11);
        REQUIRE(ex.size() == 11);
        for (std::size_t k = 0; k < rk.size(); ++k) {
            CHECK(std::abs(mass(rk.states[k]) - 1.0) <= 1e-8);
            CHECK(std::abs(mass(ex.states[k]) - 1.0) <= 1e-8);
            CHECK(min_component(rk.states[k]) >= -1e-9);
            CHECK(min_component(ex.states[k]) >= -1e-9);
            CHECK(sup_gap(rk.states[k], ex.states[k]) <= 1e-4);
        }
    }
}

TEST_CASE("both schemes converge at fourth order") {
    const GridSpec g = GridSpec::build(1, 8);
    const ModelParams p = sirlab::test::standard_params();
    const PatchState x0 = project_initial(sirlab::test::standard_initial(1), g);
    IntegratorOptions fine;
    fine.dt = 1e-4;
    const PatchState ref = integrate_rk4(p, x0, 1.0, fine).back();
    for (bool exponential : {false, true}) {
        double prev = 0.0;
        for (double dt : {0.1, 0.05, 0.025}) {
            IntegratorOptions o;
            o.dt = dt;
            o.allow_unstable = true;
            const PatchState x = exponential ? integrate_exponential(p, x0, 1.0, o).back() : integrate_rk4(p, x0, 1.0, o).back();
            const double err = sup_gap(x, ref);
            if (prev > 0.0) CHECK(prev / err > 10.0);
            prev = err;
        }
    }
}

TEST_CASE("explicit scheme refuses steps beyond the diffusion bound") {
    const GridSpec g = GridSpec::build(1, 32);
    const PatchState x0 = project_initial(sirlab::test::standard_initial(1), g);
    const ModelParams p = sirlab::test::standard_params();
    IntegratorOptions o;
    o.dt = 2.0 * rk4_stability_limit(p, g);
    CHECK_THROWS_AS(integrate_rk4(p, x0, 1.0, o), std::invalid_argument);
    CHECK(default_rk4_dt(p, g) <= rk4_stability_limit(p, g));
}

TEST_CASE("exponential scheme rejects periodic grids and samples land on requested times") {
    const GridSpec per = GridSpec::build(1, 8, Boundary::Periodic);
    PatchState x(Field(per, 0.9), Field(per, 0.1), Field(per, 0.0));
    CHECK_THROWS(integrate_exponential(sirlab::test::standard_params(), x, 1.0, {}));

    const GridSpec g = GridSpec::build(1, 8);
    IntegratorOptions o;
    o.dt = 0.03;
    o.sample_intervals = 7;
    const Trajectory t = integrate_exponential(sirlab::test::standard_params(), project_initial(sirlab::test::standard_initial(1), g), 1.4, o);
    const auto want = uniform_times(1.4, 7);
    REQUIRE(t.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(t.times[k] == doctest::Approx(want[k]).epsilon(1e-14));
}
