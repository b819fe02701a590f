#pragma once

// Cosine eigensystems of the Neumann Laplacian, discrete and continuous, and
// exact application of the heat semigroups they diagonalize.
//
// Discrete basis: f_m(x) = prod_j f_{m_j}(x_j) sampled at cell centers, with
// f_0 = 1 and f_n(x) = sqrt(2) cos(n pi x). On the cell-centered lattice this
// family is orthonormal under inner() and diagonalizes the reflected-ghost
// Laplacian with eigenvalues 2 eps^-2 sum_j (1 - cos(m_j pi eps)).

#include "sirlab/grid.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace sirlab {

struct ModeIndex {
    int dim = 1;
    std::array<int, kMaxDim> m{0, 0, 0};

    ModeIndex() = default;
    ModeIndex(int d, std::array<int, kMaxDim> modes) : dim(d), m(modes) {}
};

/// One-dimensional eigenfunction f_n(x).
double cosine_mode(int n, double x);

/// lambda_m = pi^2 sum_j m_j^2
double eig_continuous(const ModeIndex& mode);

/// lambda_m^eps; throws std::out_of_range unless every m_j < inv_eps.
double eig_discrete(const ModeIndex& mode, int inv_eps);

/// f_m^eps as a Field.
Field basis_field(const ModeIndex& mode, const GridSpec& grid);

class SpectralBasis {
public:
    enum class Path { Auto, Naive, Factorized };

    /// Sites above which Path::Auto takes the separable transform.
    static constexpr std::size_t kFactorizedThreshold = 4096;

    explicit SpectralBasis(const GridSpec& grid);

    const GridSpec& grid() const noexcept { return grid_; }
    std::size_t n_modes() const noexcept { return grid_.n_sites(); }
    ModeIndex mode(std::size_t k) const;
    double eigenvalue(std::size_t k) const { return eigenvalues_[k]; }
    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

    /// Memoized basis field; safe to call concurrently.
    const Field& basis(std::size_t k) const;

    /// Coefficients <f, f_m> for every mode (separable transform).
    std::vector<double> analyze(const Field& f) const;
    /// sum_m c_m f_m
    Field synthesize(std::span<const double> coeffs) const;

    /// T_eps(mu t) f = sum_m exp(-mu lambda_m t) <f, f_m> f_m
    Field apply_semigroup(const Field& f, double t, double mu, Path path = Path::Auto) const;

private:
    void transform(std::span<const double> in, std::span<double> out, bool forward) const;

    GridSpec grid_;
    std::vector<double> eigenvalues_;
    // row m, column i: f_m((i + 1/2) eps)
    std::vector<double> axis_matrix_;
    std::vector<double> axis_matrix_t_;

    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// Convenience wrapper building a SpectralBasis for f's grid.
Field semigroup_apply(const Field& f, double t, double mu);

/// Flattened continuous-mode layout: m_j in {0..M}, axis 0 fastest.
std::size_t continuous_mode_count(int dim, int truncation);
ModeIndex continuous_mode(int dim, int truncation, std::size_t k);

/// Coefficientwise exp(-mu lambda_m t) for the truncated continuous expansion.
std::vector<double> semigroup_apply_continuous(std::span<const double> coeffs, int dim, int truncation,
                                               double t, double mu);

}  // namespace sirlab
