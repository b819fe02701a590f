#include "doctest.h"
#include "support.hpp"

#include "sirlab/grid.hpp"

#include <cmath>

using namespace sirlab;
using sirlab::test::Gen;

namespace {

// Laplacian written from coordinates, independent of the library's link tables.
Field coordinate_laplacian(const Field& f) {
    const GridSpec& g = f.grid();
    const int n = g.inv_eps();
    Field out(g);
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        const SiteCoords c = g.coords(site);
        double acc = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            for (int s : {-1, 1}) {
                SiteCoords nb = c;
                nb[a] += s;
                if (nb[a] < 0 || nb[a] >= n) {
                    if (g.boundary() == Boundary::Neumann) nb[a] = c[a];
                    else nb[a] = (nb[a] + n) % n;
                }
                acc += f[g.index(nb)] - f[site];
            }
        }
        out[site] = acc * n * n;
    }
    return out;
}

}  // namespace

TEST_CASE("coordinates and indices are inverse") {
    Gen gen(1);
    for (int trial = 0; trial < 30; ++trial) {
        const GridSpec g = gen.grid();
        for (std::size_t site = 0; site < g.n_sites(); ++site) {
            const SiteCoords c = g.coords(site);
            CHECK(g.index(c) == site);
            for (int a = 0; a < g.dim(); ++a) {
                CHECK(g.site_position(site)[a] == doctest::Approx(c[a] * g.eps()));
                CHECK(g.cell_center(site)[a] == doctest::Approx((c[a] + 0.5) * g.eps()));
            }
        }
        CHECK(g.cell_volume() == doctest::Approx(std::pow(g.eps(), g.dim())));
    }
}

TEST_CASE("links are symmetric and boundary links follow the boundary rule") {
    Gen gen(2);
    for (int trial = 0; trial < 30; ++trial) {
        const GridSpec g = gen.grid();
        for (std::size_t site = 0; site < g.n_sites(); ++site) {
            const SiteCoords c = g.coords(site);
            for (int a = 0; a < g.dim(); ++a) {
                for (int s : {-1, 1}) {
                    const Link l = g.link(site, a, s);
                    const bool edge = (s < 0 && c[a] == 0) || (s > 0 && c[a] == g.inv_eps() - 1);
                    if (!edge) {
                        CHECK(l.kind == LinkKind::Interior);
                    } else if (g.boundary() == Boundary::Neumann) {
                        CHECK(l.kind == LinkKind::Ghost);
                        CHECK(l.other == site);
                        continue;
                    } else {
                        CHECK(l.kind == LinkKind::Wrapped);
                    }
                    const Link back = g.link(l.other, a, -s);
                    CHECK(back.other == site);
                }
            }
        }
    }
}

TEST_CASE("discrete Laplacian matches the coordinate formula, sums to zero and is self-adjoint") {
    Gen gen(3);
    for (int trial = 0; trial < 40; ++trial) {
        const GridSpec g = gen.grid();
        const Field f = gen.field(g), h = gen.field(g);
        const Field lf = discrete_laplacian(f);
        const Field want = coordinate_laplacian(f);
        for (std::size_t k = 0; k < f.size(); ++k) CHECK(lf[k] == doctest::Approx(want[k]).epsilon(1e-12));
        CHECK(std::abs(integral(lf)) <= 1e-10 * g.inv_eps() * g.inv_eps());
        CHECK(inner(lf, h) == doctest::Approx(inner(f, discrete_laplacian(h))).epsilon(1e-10));
        CHECK(inner(lf, f) <= 1e-12);

        std::vector<double> acc(f.size(), 1.0);
        const double mu = gen.uniform(0.0, 2.0);
        add_scaled_laplacian(f, mu, acc);
        for (std::size_t k = 0; k < f.size(); ++k) CHECK(acc[k] == doctest::Approx(1.0 + mu * want[k]).epsilon(1e-12));
    }
}

TEST_CASE("gradients are one-sided differences") {
    const GridSpec g = GridSpec::build(2, 5, Boundary::Periodic);
    Gen gen(4);
    const Field f = gen.field(g);
    const Field gx = gradient(f, 0, +1);
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        const std::size_t nb = g.link(site, 0, +1).other;
        CHECK(gx[site] == doctest::Approx((f[nb] - f[site]) * 5.0));
    }
}

TEST_CASE("Gauss-Legendre rule integrates polynomials up to degree 2n - 1 exactly") {
    for (int order = 1; order <= 8; ++order) {
        const QuadratureRule q = gauss_legendre_unit(order);
        REQUIRE(q.nodes.size() == static_cast<std::size_t>(order));
        for (int p = 0; p < 2 * order; ++p) {
            double acc = 0.0;
            for (int k = 0; k < order; ++k) acc += q.weights[k] * std::pow(q.nodes[k], p);
            CHECK(acc == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
        }
    }
}

TEST_CASE("cell-average projection reproduces affine functions at cell centers") {
    Gen gen(5);
    for (int trial = 0; trial < 10; ++trial) {
        const GridSpec g = gen.grid(3, 8);
        const double c0 = gen.uniform(), c1 = gen.uniform(), c2 = gen.uniform(), c3 = gen.uniform();
        const auto phi = [&](const Point& x) { return c0 + c1 * x[0] + c2 * x[1] + c3 * x[2]; };
        const Field p = project(phi, g, 2);
        for (std::size_t site = 0; site < g.n_sites(); ++site) {
            Point mid = g.cell_center(site);
            for (int a = g.dim(); a < kMaxDim; ++a) mid[a] = 0.0;
            CHECK(p[site] == doctest::Approx(phi(mid)).epsilon(1e-13));
        }
    }
}

TEST_CASE("refinement is integer nesting with equal dimension and boundary") {
    const GridSpec c = GridSpec::build(2, 4);
    CHECK(GridSpec::build(2, 8).refines(c));
    CHECK(GridSpec::build(2, 4).refines(c));
    CHECK_FALSE(GridSpec::build(2, 6).refines(c));
    CHECK_FALSE(GridSpec::build(1, 8).refines(c));
    CHECK_FALSE(GridSpec::build(2, 8, Boundary::Periodic).refines(c));
}

TEST_CASE("invalid grids and mismatched fields are rejected") {
    CHECK_THROWS_AS(GridSpec::build(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::build(4, 4), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::build(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(parse_boundary("dirichlet"), std::invalid_argument);
    CHECK(parse_boundary("periodic") == Boundary::Periodic);
    CHECK_THROWS(require_same_grid(GridSpec::build(1, 4), GridSpec::build(1, 8), "test"));
}
