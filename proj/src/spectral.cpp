#include "sirlab/spectral.hpp"

#include "sirlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace sirlab {

namespace {

constexpr double kPi = std::numbers::pi;

void check_mode(const ModeIndex& mode) {
    if (mode.dim < 1 || mode.dim > kMaxDim) throw std::invalid_argument("mode dimension must be 1, 2 or 3");
    for (int a = 0; a < mode.dim; ++a)
        if (mode.m[a] < 0) throw std::out_of_range("mode components must be nonnegative");
}

// Applies a square per-axis matrix (row-major, n x n) along `axis`.
void apply_along_axis(const GridSpec& g, int axis, const double* matrix, const double* in, double* out) {
    const auto& k = kernels::active();
    const std::size_t n = static_cast<std::size_t>(g.inv_eps());
    const std::size_t s = g.stride(axis);
    const std::size_t block = s * n;
    const std::size_t outer = g.n_sites() / block;
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in + o * block;
        double* dst = out + o * block;
        if (s == 1) {
            for (std::size_t m = 0; m < n; ++m) dst[m] = k.dot(matrix + m * n, src, n);
        } else {
            for (std::size_t m = 0; m < n; ++m) {
                double* row = dst + m * s;
                std::fill(row, row + s, 0.0);
                for (std::size_t i = 0; i < n; ++i) k.axpy(row, matrix[m * n + i], src + i * s, s);
            }
        }
    }
}

}  // namespace

double cosine_mode(int n, double x) {
    return n == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(n * kPi * x);
}

double eig_continuous(const ModeIndex& mode) {
    check_mode(mode);
    double acc = 0.0;
    for (int a = 0; a < mode.dim; ++a) acc += static_cast<double>(mode.m[a]) * mode.m[a];
    return kPi * kPi * acc;
}

double eig_discrete(const ModeIndex& mode, int inv_eps) {
    check_mode(mode);
    if (inv_eps < 1) throw std::invalid_argument("inv_eps must be positive");
    const double eps = 1.0 / inv_eps;
    double acc = 0.0;
    for (int a = 0; a < mode.dim; ++a) {
        if (mode.m[a] >= inv_eps)
            throw std::out_of_range("mode component " + std::to_string(mode.m[a]) + " out of range for eps=1/" +
                                    std::to_string(inv_eps));
        acc += 1.0 - std::cos(mode.m[a] * kPi * eps);
    }
    return 2.0 * inv_eps * static_cast<double>(inv_eps) * acc;
}

Field basis_field(const ModeIndex& mode, const GridSpec& grid) {
    check_mode(mode);
    if (mode.dim != grid.dim()) throw std::invalid_argument("mode dimension does not match grid");
    for (int a = 0; a < mode.dim; ++a)
        if (mode.m[a] >= grid.inv_eps()) throw std::out_of_range("mode out of range for grid");
    Field f(grid, 1.0);
    for (std::size_t site = 0; site < grid.n_sites(); ++site) {
        const Point c = grid.cell_center(site);
        double v = 1.0;
        for (int a = 0; a < grid.dim(); ++a) v *= cosine_mode(mode.m[a], c[a]);
        f[site] = v;
    }
    return f;
}

struct SpectralBasis::Cache {
    std::mutex mutex;
    std::unordered_map<std::size_t, std::unique_ptr<Field>> fields;
};

SpectralBasis::SpectralBasis(const GridSpec& grid) : grid_(grid), cache_(std::make_shared<Cache>()) {
    if (grid.boundary() != Boundary::Neumann)
        throw std::invalid_argument("cosine eigenbasis requires a Neumann grid");
    const std::size_t n = static_cast<std::size_t>(grid.inv_eps());
    axis_matrix_.resize(n * n);
    axis_matrix_t_.resize(n * n);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = cosine_mode(static_cast<int>(m), (i + 0.5) * grid.eps());
            axis_matrix_[m * n + i] = v;
            axis_matrix_t_[i * n + m] = v;
        }
    }
    eigenvalues_.resize(grid.n_sites());
    for (std::size_t k = 0; k < grid.n_sites(); ++k) eigenvalues_[k] = eig_discrete(mode(k), grid.inv_eps());
}

ModeIndex SpectralBasis::mode(std::size_t k) const { return ModeIndex(grid_.dim(), grid_.coords(k)); }

const Field& SpectralBasis::basis(std::size_t k) const {
    if (k >= n_modes()) throw std::out_of_range("mode index out of range");
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->fields[k];
    if (!slot) slot = std::make_unique<Field>(basis_field(mode(k), grid_));
    return *slot;
}

void SpectralBasis::transform(std::span<const double> in, std::span<double> out, bool forward) const {
    const double* matrix = forward ? axis_matrix_.data() : axis_matrix_t_.data();
    std::vector<double> scratch(in.begin(), in.end());
    std::vector<double> next(in.size());
    for (int a = 0; a < grid_.dim(); ++a) {
        apply_along_axis(grid_, a, matrix, scratch.data(), next.data());
        scratch.swap(next);
    }
    if (forward) {
        kernels::active().scale(out.data(), grid_.cell_volume(), scratch.data(), scratch.size());
    } else {
        std::copy(scratch.begin(), scratch.end(), out.begin());
    }
}

std::vector<double> SpectralBasis::analyze(const Field& f) const {
    require_same_grid(f.grid(), grid_, "analyze");
    std::vector<double> coeffs(n_modes());
    transform(f.values(), coeffs, true);
    return coeffs;
}

Field SpectralBasis::synthesize(std::span<const double> coeffs) const {
    if (coeffs.size() != n_modes()) throw std::invalid_argument("coefficient vector has wrong length");
    Field out(grid_, 0.0);
    transform(coeffs, out.values(), false);
    return out;
}

Field SpectralBasis::apply_semigroup(const Field& f, double t, double mu, Path path) const {
    require_same_grid(f.grid(), grid_, "semigroup_apply");
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be nonnegative");
    if (!(mu >= 0.0)) throw std::invalid_argument("diffusivity must be nonnegative");
    if (path == Path::Auto) path = n_modes() > kFactorizedThreshold ? Path::Factorized : Path::Naive;

    if (path == Path::Factorized) {
        std::vector<double> coeffs = analyze(f);
        for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] *= std::exp(-mu * eigenvalues_[k] * t);
        return synthesize(coeffs);
    }

    const auto& kern = kernels::active();
    Field out(grid_, 0.0);
    for (std::size_t k = 0; k < n_modes(); ++k) {
        const Field& b = basis(k);
        const double c = inner(f, b) * std::exp(-mu * eigenvalues_[k] * t);
        kern.axpy(out.data(), c, b.data(), out.size());
    }
    return out;
}

Field semigroup_apply(const Field& f, double t, double mu) {
    return SpectralBasis(f.grid()).apply_semigroup(f, t, mu);
}

std::size_t continuous_mode_count(int dim, int truncation) {
    if (truncation < 0) throw std::invalid_argument("truncation must be nonnegative");
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(truncation + 1);
    return n;
}

ModeIndex continuous_mode(int dim, int truncation, std::size_t k) {
    ModeIndex mode;
    mode.dim = dim;
    const std::size_t base = static_cast<std::size_t>(truncation + 1);
    for (int a = 0; a < dim; ++a) {
        mode.m[a] = static_cast<int>(k % base);
        k /= base;
    }
    return mode;
}

std::vector<double> semigroup_apply_continuous(std::span<const double> coeffs, int dim, int truncation,
                                               double t, double mu) {
    if (coeffs.size() != continuous_mode_count(dim, truncation))
        throw std::invalid_argument("coefficient vector does not match (dim, truncation)");
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be nonnegative");
    std::vector<double> out(coeffs.begin(), coeffs.end());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] *= std::exp(-mu * eig_continuous(continuous_mode(dim, truncation, k)) * t);
    return out;
}

}  // namespace sirlab
