#pragma once

// Shared fixtures and hand-rolled generators for the unit tests.

#include "sirlab/grid.hpp"
#include "sirlab/model.hpp"
#include "sirlab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sirlab::test {

inline ModelParams standard_params() {
    ModelParams p;
    p.beta = SpatialFunction::constant(1.5);
    p.alpha = SpatialFunction::constant(1.0);
    p.mu_S = p.mu_I = p.mu_R = 0.1;
    return p;
}

inline InitialData standard_initial(int dim) {
    SpatialFunction::GaussianBump bump;
    bump.dim = dim;
    bump.center = {0.3, 0.3, 0.3};
    bump.width = 0.1;
    bump.base = 0.0;
    bump.peak = 0.2;
    InitialData data;
    data.s0 = SpatialFunction::constant(1.0);
    data.i0 = SpatialFunction(bump);
    data.r0 = SpatialFunction::constant(0.0);
    return data.scaled(1.0 / data.total_mass(dim));
}

// Deterministic random inputs for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * rng_.uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_.next() % static_cast<std::uint64_t>(hi - lo + 1)); }
    bool coin() { return (rng_.next() & 1u) != 0; }

    GridSpec grid(int max_dim = 3, int max_inv_eps = 12) {
        const int dim = integer(1, max_dim);
        const int cap = dim == 3 ? std::min(max_inv_eps, 6) : max_inv_eps;
        return GridSpec::build(dim, integer(2, cap), coin() ? Boundary::Neumann : Boundary::Periodic);
    }

    Field field(const GridSpec& g, double lo = -1.0, double hi = 1.0) {
        Field f(g);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = uniform(lo, hi);
        return f;
    }

    PatchState density(const GridSpec& g) {
        PatchState x(field(g, 0.0, 1.0), field(g, 0.0, 0.3), field(g, 0.0, 0.2));
        return x;
    }

    std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(lo, hi);
        return v;
    }

private:
    Rng rng_;
};

}  // namespace sirlab::test
