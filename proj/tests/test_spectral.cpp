#include "doctest.h"
#include "support.hpp"

#include "sirlab/spectral.hpp"

#include <cmath>
#include <numbers>

using namespace sirlab;
using sirlab::test::Gen;

namespace {

// Heat flow df/dt = mu Delta f by many small RK4 steps: an oracle for the semigroup.
Field heat_flow_rk4(Field f, double mu, double t, int steps) {
    const double h = t / steps;
    for (int n = 0; n < steps; ++n) {
        const Field k1 = discrete_laplacian(f);
        Field tmp = f;
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * mu * k1[i];
        const Field k2 = discrete_laplacian(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * mu * k2[i];
        const Field k3 = discrete_laplacian(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + h * mu * k3[i];
        const Field k4 = discrete_laplacian(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += h * mu / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return f;
}

}  // namespace

TEST_CASE("basis is orthonormal under the step-function inner product") {
    for (int dim : {1, 2, 3}) {
        const GridSpec g = GridSpec::build(dim, dim == 3 ? 4 : 8);
        const SpectralBasis b(g);
        for (std::size_t j = 0; j < b.n_modes(); ++j)
            for (std::size_t k = j; k < b.n_modes(); ++k)
                CHECK(std::abs(inner(b.basis(j), b.basis(k)) - (j == k ? 1.0 : 0.0)) <= 1e-12);
    }
}

TEST_CASE("basis fields are eigenvectors of the Neumann Laplacian") {
    for (int dim : {1, 2}) {
        const GridSpec g = GridSpec::build(dim, 8);
        const SpectralBasis b(g);
        for (std::size_t k = 0; k < b.n_modes(); ++k) {
            const ModeIndex m = b.mode(k);
            double lam = 0.0;
            for (int a = 0; a < dim; ++a) lam += 2.0 * 64.0 * (1.0 - std::cos(m.m[a] * std::numbers::pi / 8.0));
            CHECK(b.eigenvalue(k) == doctest::Approx(lam).epsilon(1e-12));
            const Field lf = discrete_laplacian(b.basis(k));
            for (std::size_t i = 0; i < lf.size(); ++i) CHECK(std::abs(lf[i] + lam * b.basis(k)[i]) <= 1e-10);
        }
    }
}

TEST_CASE("basis values are products of sampled cosines") {
    const GridSpec g = GridSpec::build(2, 6);
    const ModeIndex m(2, {2, 3, 0});
    const Field f = basis_field(m, g);
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        const Point x = g.cell_center(site);
        const double want = 2.0 * std::cos(2 * std::numbers::pi * x[0]) * std::cos(3 * std::numbers::pi * x[1]);
        CHECK(f[site] == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("discrete eigenvalues approach the continuous ones") {
    for (int m = 1; m <= 3; ++m) {
        const ModeIndex idx(1, {m, 0, 0});
        const double cont = std::numbers::pi * std::numbers::pi * m * m;
        CHECK(eig_continuous(idx) == doctest::Approx(cont));
        double prev = 1.0;
        for (int inv : {16, 32, 64, 128}) {
            const double rel = std::abs(eig_discrete(idx, inv) - cont) / cont;
            CHECK(rel < prev);
            prev = rel;
        }
        CHECK(prev <= 0.01);
    }
    CHECK_THROWS_AS(eig_discrete(ModeIndex(1, {8, 0, 0}), 8), std::out_of_range);
}

TEST_CASE("analysis and synthesis are inverse") {
    Gen gen(21);
    for (int trial = 0; trial < 10; ++trial) {
        const GridSpec g = GridSpec::build(gen.integer(1, 3), gen.integer(2, 7));
        const SpectralBasis b(g);
        const Field f = gen.field(g);
        const Field back = b.synthesize(b.analyze(f));
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == doctest::Approx(f[i]).epsilon(1e-12));
        const auto c = b.analyze(f);
        for (std::size_t k = 0; k < c.size(); ++k) CHECK(c[k] == doctest::Approx(inner(f, b.basis(k))).epsilon(1e-10));
    }
}

TEST_CASE("semigroup law, identity at zero, and agreement with the heat flow") {
    Gen gen(22);
    for (int dim : {1, 2}) {
        const GridSpec g = GridSpec::build(dim, 8);
        const SpectralBasis b(g);
        const Field f = gen.field(g);
        const double mu = 0.3, t = 0.05, s = 0.11;
        const Field zero = b.apply_semigroup(f, 0.0, mu);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(zero[i] - f[i]) <= 1e-12);
        const Field ts = b.apply_semigroup(b.apply_semigroup(f, s, mu), t, mu);
        const Field sum = b.apply_semigroup(f, t + s, mu);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(ts[i] - sum[i]) <= 1e-10);

        const Field naive = b.apply_semigroup(f, t, mu, SpectralBasis::Path::Naive);
        const Field fact = b.apply_semigroup(f, t, mu, SpectralBasis::Path::Factorized);
        const Field flow = heat_flow_rk4(f, mu, t, 2000);
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(std::abs(naive[i] - fact[i]) <= 1e-12);
            CHECK(std::abs(fact[i] - flow[i]) <= 1e-9);
        }
        CHECK(integral(fact) == doctest::Approx(integral(f)).epsilon(1e-12));
    }
}

TEST_CASE("continuous semigroup scales each coefficient by its decay") {
    const int M = 5;
    const std::size_t n = continuous_mode_count(2, M);
    CHECK(n == 36);
    std::vector<double> c(n, 1.0);
    const auto out = semigroup_apply_continuous(c, 2, M, 0.2, 0.5);
    for (std::size_t k = 0; k < n; ++k) {
        const ModeIndex m = continuous_mode(2, M, k);
        const double lam = std::numbers::pi * std::numbers::pi * (m.m[0] * m.m[0] + m.m[1] * m.m[1]);
        CHECK(out[k] == doctest::Approx(std::exp(-0.5 * lam * 0.2)).epsilon(1e-14));
    }
}
