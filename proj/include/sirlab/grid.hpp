#pragma once

// Lattice geometry on the unit box, the step-function space over its cells,
// and the finite-difference operators that act on it.
//
// Cells are V_i = prod_j [i_j eps, (i_j + 1) eps) and tile [0,1)^d exactly.
// Sites are flattened with axis 0 varying fastest.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sirlab {

inline constexpr int kMaxDim = 3;

using SiteCoords = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

enum class Boundary { Neumann, Periodic };

std::string_view to_string(Boundary b);
Boundary parse_boundary(std::string_view text);

enum class LinkKind { Interior, Ghost, Wrapped };

struct Link {
    LinkKind kind;
    /// Linked site. For a Ghost link this is the site itself (reflection).
    std::size_t other;
};

struct SiteNeighborhood {
    std::size_t site;
    int dim;
    /// Indexed by 2 * axis + (sign > 0 ? 1 : 0).
    std::array<Link, 2 * kMaxDim> links;

    const Link& link(int axis, int sign) const { return links[2 * axis + (sign > 0 ? 1 : 0)]; }
};

class GridSpec {
public:
    GridSpec() = default;

    static GridSpec build(int dim, int inv_eps, Boundary boundary = Boundary::Neumann);

    int dim() const noexcept { return dim_; }
    int inv_eps() const noexcept { return inv_eps_; }
    double eps() const noexcept { return 1.0 / inv_eps_; }
    std::size_t n_sites() const noexcept { return n_sites_; }
    Boundary boundary() const noexcept { return boundary_; }
    /// eps^d
    double cell_volume() const noexcept { return cell_volume_; }

    std::size_t stride(int axis) const noexcept { return strides_[axis]; }
    SiteCoords coords(std::size_t site) const;
    std::size_t index(const SiteCoords& c) const;

    /// Representative point x_i = i * eps (the cell's lower corner).
    Point site_position(std::size_t site) const;
    /// Midpoint of V_i.
    Point cell_center(std::size_t site) const;

    Link link(std::size_t site, int axis, int sign) const;
    SiteNeighborhood neighborhood(std::size_t site) const;

    /// True when this grid is an integer refinement of `coarse` (same d and boundary).
    bool refines(const GridSpec& coarse) const noexcept;

    std::string describe() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    int dim_ = 1;
    int inv_eps_ = 1;
    Boundary boundary_ = Boundary::Neumann;
    std::size_t n_sites_ = 1;
    double cell_volume_ = 1.0;
    std::array<std::size_t, kMaxDim> strides_{1, 1, 1};
};

/// An element of H^eps: one value per cell.
class Field {
public:
    Field() = default;
    explicit Field(const GridSpec& grid, double fill = 0.0);
    Field(const GridSpec& grid, std::vector<double> values);

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const Field&, const Field&) = default;

private:
    GridSpec grid_;
    std::vector<double> values_;
};

using SpatialFn = std::function<double(const Point&)>;

/// Delta_eps f, with reflected ghosts (Neumann) or wrap-around (Periodic).
Field discrete_laplacian(const Field& f);

/// out += mu * Delta_eps f. `out` must have n_sites entries.
void add_scaled_laplacian(const Field& f, double mu, std::span<double> out);

/// Forward (sign > 0) or backward (sign < 0) difference along `axis`.
Field gradient(const Field& f, int axis, int sign);

/// Cell-average projection P_eps phi by tensor Gauss-Legendre quadrature, composite
/// below 64 cells per axis (32 in 3-d) so coarse and fine projections agree.
Field project(const SpatialFn& phi, const GridSpec& grid, int quad_order = 5);

/// Gauss-Legendre nodes/weights on [0, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre_unit(int order);

double sup_norm(const Field& f);
double l1_norm(std::span<const double> v);
/// eps^d sum f_i g_i, the L2(D) product of the step functions.
double inner(const Field& f, const Field& g);
/// eps^d sum f_i.
double integral(const Field& f);

void require_same_grid(const GridSpec& a, const GridSpec& b, std::string_view what);

}  // namespace sirlab
