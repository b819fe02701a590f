#include "sirlab/grid.hpp"

#include "sirlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sirlab {

std::string_view to_string(Boundary b) {
    return b == Boundary::Neumann ? "neumann" : "periodic";
}

Boundary parse_boundary(std::string_view text) {
    if (text == "neumann" || text == "Neumann") return Boundary::Neumann;
    if (text == "periodic" || text == "Periodic") return Boundary::Periodic;
    throw std::invalid_argument("unknown boundary mode '" + std::string(text) + "'");
}

GridSpec GridSpec::build(int dim, int inv_eps, Boundary boundary) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("grid dimension must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
    if (inv_eps < 1)
        throw std::invalid_argument("inv_eps must be a positive integer (got " + std::to_string(inv_eps) + ")");

    GridSpec g;
    g.dim_ = dim;
    g.inv_eps_ = inv_eps;
    g.boundary_ = boundary;
    std::size_t n = 1;
    for (int a = 0; a < kMaxDim; ++a) {
        g.strides_[a] = n;
        if (a < dim) n *= static_cast<std::size_t>(inv_eps);
    }
    g.n_sites_ = n;
    g.cell_volume_ = std::pow(1.0 / inv_eps, dim);
    return g;
}

SiteCoords GridSpec::coords(std::size_t site) const {
    SiteCoords c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        c[a] = static_cast<int>(site % static_cast<std::size_t>(inv_eps_));
        site /= static_cast<std::size_t>(inv_eps_);
    }
    return c;
}

std::size_t GridSpec::index(const SiteCoords& c) const {
    std::size_t site = 0;
    for (int a = 0; a < dim_; ++a) site += static_cast<std::size_t>(c[a]) * strides_[a];
    return site;
}

Point GridSpec::site_position(std::size_t site) const {
    const SiteCoords c = coords(site);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = c[a] * eps();
    return x;
}

Point GridSpec::cell_center(std::size_t site) const {
    const SiteCoords c = coords(site);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) x[a] = (c[a] + 0.5) * eps();
    return x;
}

Link GridSpec::link(std::size_t site, int axis, int sign) const {
    const SiteCoords c = coords(site);
    const int target = c[axis] + (sign > 0 ? 1 : -1);
    if (target >= 0 && target < inv_eps_) {
        SiteCoords n = c;
        n[axis] = target;
        return {LinkKind::Interior, index(n)};
    }
    if (boundary_ == Boundary::Neumann) return {LinkKind::Ghost, site};
    SiteCoords n = c;
    n[axis] = (target + inv_eps_) % inv_eps_;
    return {LinkKind::Wrapped, index(n)};
}

SiteNeighborhood GridSpec::neighborhood(std::size_t site) const {
    SiteNeighborhood nb{site, dim_, {}};
    for (int a = 0; a < dim_; ++a) {
        nb.links[2 * a] = link(site, a, -1);
        nb.links[2 * a + 1] = link(site, a, +1);
    }
    return nb;
}

bool GridSpec::refines(const GridSpec& coarse) const noexcept {
    return dim_ == coarse.dim_ && boundary_ == coarse.boundary_ && inv_eps_ % coarse.inv_eps_ == 0;
}

std::string GridSpec::describe() const {
    std::ostringstream os;
    os << "d=" << dim_ << " eps=1/" << inv_eps_ << " (" << n_sites_ << " sites, " << to_string(boundary_)
       << ")";
    return os.str();
}

Field::Field(const GridSpec& grid, double fill) : grid_(grid), values_(grid.n_sites(), fill) {}

Field::Field(const GridSpec& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n_sites())
        throw std::invalid_argument("field length " + std::to_string(values_.size()) +
                                    " does not match grid with " + std::to_string(grid_.n_sites()) + " sites");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, std::string_view what) {
    if (!(a == b))
        throw std::invalid_argument(std::string(what) + ": grid mismatch (" + a.describe() + " vs " +
                                    b.describe() + ")");
}

void add_scaled_laplacian(const Field& f, double mu, std::span<double> out) {
    const GridSpec& g = f.grid();
    if (out.size() != g.n_sites()) throw std::invalid_argument("laplacian output has wrong length");
    if (mu == 0.0) return;

    const auto& k = kernels::active();
    const std::size_t n = static_cast<std::size_t>(g.inv_eps());
    const double scale = mu * static_cast<double>(n) * static_cast<double>(n);
    const bool periodic = g.boundary() == Boundary::Periodic;
    const double* src = f.data();
    double* dst = out.data();

    // Axis 0: contiguous lines of length n.
    const std::size_t lines = g.n_sites() / n;
    for (std::size_t line = 0; line < lines; ++line) {
        const double* v = src + line * n;
        double* o = dst + line * n;
        if (n == 1) {
            // single cell: ghost or wrap both give the cell itself
            continue;
        }
        const double left_ghost = periodic ? v[n - 1] : v[0];
        const double right_ghost = periodic ? v[0] : v[n - 1];
        o[0] += scale * (left_ghost - 2.0 * v[0] + v[1]);
        if (n > 2) k.stencil3(o + 1, v, v + 1, v + 2, scale, n - 2);
        o[n - 1] += scale * (v[n - 2] - 2.0 * v[n - 1] + right_ghost);
    }

    // Higher axes: whole contiguous rows of length stride(axis) are shifted.
    for (int a = 1; a < g.dim(); ++a) {
        const std::size_t s = g.stride(a);
        const std::size_t block = s * n;
        const std::size_t outer = g.n_sites() / block;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* base = src + o * block;
            double* obase = dst + o * block;
            for (std::size_t p = 0; p < n; ++p) {
                std::size_t pm = p == 0 ? (periodic ? n - 1 : 0) : p - 1;
                std::size_t pp = p + 1 == n ? (periodic ? 0 : n - 1) : p + 1;
                k.stencil3(obase + p * s, base + pm * s, base + p * s, base + pp * s, scale, s);
            }
        }
    }
}

Field discrete_laplacian(const Field& f) {
    Field out(f.grid(), 0.0);
    add_scaled_laplacian(f, 1.0, out.values());
    return out;
}

Field gradient(const Field& f, int axis, int sign) {
    const GridSpec& g = f.grid();
    if (axis < 0 || axis >= g.dim())
        throw std::invalid_argument("gradient axis " + std::to_string(axis) + " outside 0.." +
                                    std::to_string(g.dim() - 1));
    if (sign == 0) throw std::invalid_argument("gradient sign must be +1 or -1");
    Field out(g, 0.0);
    const double inv = static_cast<double>(g.inv_eps());
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        const Link l = g.link(site, axis, sign);
        out[site] = sign > 0 ? (f[l.other] - f[site]) * inv : (f[site] - f[l.other]) * inv;
    }
    return out;
}

QuadratureRule gauss_legendre_unit(int order) {
    if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int n = order;
    for (int k = 0; k < (n + 1) / 2; ++k) {
        // Chebyshev-like initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        rule.nodes[k] = 0.5 * (1.0 - x);
        rule.nodes[n - 1 - k] = 0.5 * (1.0 + x);
        rule.weights[k] = 0.5 * w;
        rule.weights[n - 1 - k] = 0.5 * w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
    return rule;
}

Field project(const SpatialFn& phi, const GridSpec& grid, int quad_order) {
    const QuadratureRule rule = gauss_legendre_unit(quad_order);
    const int q = quad_order;
    const int d = grid.dim();
    // Composite rule: each cell is split so the effective resolution matches a
    // fixed floor, keeping coarse projections consistent with fine ones.
    const int floor_cells = d < 3 ? 64 : 32;
    const int sub = std::max(1, (floor_cells + grid.inv_eps() - 1) / grid.inv_eps());
    const int nodes_per_axis = sub * q;
    const double h = grid.eps() / sub;
    std::vector<double> offset(nodes_per_axis), weight(nodes_per_axis);
    for (int k = 0; k < sub; ++k)
        for (int j = 0; j < q; ++j) {
            offset[k * q + j] = h * (k + rule.nodes[j]);
            weight[k * q + j] = rule.weights[j] / sub;
        }
    std::size_t points = 1;
    for (int a = 0; a < d; ++a) points *= static_cast<std::size_t>(nodes_per_axis);

    Field out(grid, 0.0);
    for (std::size_t site = 0; site < grid.n_sites(); ++site) {
        const Point corner = grid.site_position(site);
        double acc = 0.0;
        for (std::size_t p = 0; p < points; ++p) {
            Point x{0.0, 0.0, 0.0};
            double w = 1.0;
            std::size_t rem = p;
            for (int a = 0; a < d; ++a) {
                const std::size_t j = rem % nodes_per_axis;
                rem /= nodes_per_axis;
                x[a] = corner[a] + offset[j];
                w *= weight[j];
            }
            acc += w * phi(x);
        }
        out[site] = acc;
    }
    return out;
}

double sup_norm(const Field& f) { return kernels::active().max_abs(f.data(), f.size()); }

double l1_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += std::fabs(x);
    return acc;
}

double inner(const Field& f, const Field& g) {
    require_same_grid(f.grid(), g.grid(), "inner");
    return f.grid().cell_volume() * kernels::active().dot(f.data(), g.data(), f.size());
}

double integral(const Field& f) { return f.grid().cell_volume() * kernels::active().sum(f.data(), f.size()); }

}  // namespace sirlab
