#include "sirlab/pde_reference.hpp"

#include "sirlab/kernels.hpp"
#include "sirlab/parallel.hpp"
#include "sirlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sirlab {

Field restrict_to(const Field& fine, const GridSpec& coarse) {
    const GridSpec& g = fine.grid();
    if (!g.refines(coarse)) {
        std::ostringstream os;
        os << "cannot aggregate " << g.describe() << " onto " << coarse.describe() << ": meshes are not nested";
        throw std::invalid_argument(os.str());
    }
    const int ratio = g.inv_eps() / coarse.inv_eps();
    Field out(coarse, 0.0);
    for (std::size_t site = 0; site < g.n_sites(); ++site) {
        SiteCoords c = g.coords(site);
        for (int a = 0; a < g.dim(); ++a) c[a] /= ratio;
        out[coarse.index(c)] += fine[site];
    }
    const double inv_count = 1.0 / std::pow(static_cast<double>(ratio), g.dim());
    for (double& v : out.values()) v *= inv_count;
    return out;
}

PatchState restrict_to(const PatchState& fine, const GridSpec& coarse) {
    return PatchState(restrict_to(fine.s, coarse), restrict_to(fine.i, coarse), restrict_to(fine.r, coarse));
}

PatchState ReferenceSolution::at(std::size_t k, const GridSpec& coarse) const {
    return restrict_to(trajectory.states.at(k), coarse);
}

namespace {

IntegratorKind resolve(IntegratorKind kind, const GridSpec& grid) {
    if (kind != IntegratorKind::Auto) return kind;
    return grid.boundary() == Boundary::Neumann ? IntegratorKind::Exponential : IntegratorKind::RK4;
}

Trajectory integrate(const ModelParams& params, const PatchState& x0, double horizon, const FineMeshOptions& opt) {
    IntegratorOptions io;
    io.dt = opt.dt;
    io.sample_intervals = opt.sample_intervals;
    if (resolve(opt.integrator, x0.grid()) == IntegratorKind::Exponential)
        return integrate_exponential(params, x0, horizon, io);
    return integrate_rk4(params, x0, horizon, io);
}

double effective_dt(const ModelParams& params, const GridSpec& grid, const FineMeshOptions& opt) {
    if (opt.dt > 0.0) return opt.dt;
    return resolve(opt.integrator, grid) == IntegratorKind::Exponential ? kDefaultExponentialDt
                                                                        : default_rk4_dt(params, grid);
}

// Dense tensor with axis 0 fastest; extents change as per-axis matrices are applied.
struct Tensor {
    int dim = 1;
    std::array<std::size_t, kMaxDim> ext{1, 1, 1};
    std::vector<double> data;
};

// out = A applied along `axis`, A row-major rows x ext[axis].
Tensor apply_axis(const Tensor& in, int axis, const std::vector<double>& A, std::size_t rows) {
    const auto& k = kernels::active();
    const std::size_t cols = in.ext[axis];
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= in.ext[a];
    std::size_t outer = 1;
    for (int a = axis + 1; a < in.dim; ++a) outer *= in.ext[a];

    Tensor out;
    out.dim = in.dim;
    out.ext = in.ext;
    out.ext[axis] = rows;
    out.data.assign(s * rows * outer, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = in.data.data() + o * s * cols;
        double* dst = out.data.data() + o * s * rows;
        if (s == 1) {
            for (std::size_t r = 0; r < rows; ++r) dst[r] = k.dot(A.data() + r * cols, src, cols);
        } else {
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) k.axpy(dst + r * s, A[r * cols + c], src + c * s, s);
        }
    }
    return out;
}

Tensor apply_all_axes(Tensor t, const std::vector<double>& A, std::size_t rows) {
    for (int a = 0; a < t.dim; ++a) t = apply_axis(t, a, A, rows);
    return t;
}

Tensor shaped(int dim, std::size_t n, std::vector<double> data) {
    Tensor t;
    t.dim = dim;
    for (int a = 0; a < dim; ++a) t.ext[a] = n;
    t.data = std::move(data);
    return t;
}

// (1 - e^-z) / z and (1 - e^-z (1 + z)) / z^2, stable near 0.
double phi1(double z) { return z < 1e-8 ? 1.0 - 0.5 * z : -std::expm1(-z) / z; }
double psi(double z) {
    if (z < 1e-2) return 0.5 + z * (-1.0 / 3.0 + z * (1.0 / 8.0 + z * (-1.0 / 30.0 + z * (1.0 / 144.0 - z / 840.0))));
    return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

}  // namespace

ReferenceSolution solve_reference_fine(const ModelParams& params, const InitialData& initial, const GridSpec& grid,
                                       double horizon, const FineMeshOptions& options) {
    ReferenceSolution ref;
    ref.route = ReferenceRoute::FineMesh;
    ref.grid = grid;
    ref.dt = effective_dt(params, grid, options);
    const PatchState x0 = project_initial(initial, grid, options.quad_order);
    ref.trajectory = integrate(params, x0, horizon, options);
    return ref;
}

ReferenceSolution solve_reference_spectral(const ModelParams& params, const InitialData& initial,
                                           const GridSpec& output, double horizon, const PicardOptions& options) {
    params.validate();
    if (!params.beta.is_constant() || !params.alpha.is_constant())
        throw std::invalid_argument("spectral reference requires spatially constant beta and alpha");
    if (output.boundary() != Boundary::Neumann)
        throw std::invalid_argument("spectral reference uses the Neumann cosine basis");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (options.max_iterations < 1) throw std::invalid_argument("need at least one Picard sweep");
    if (options.time_intervals < 1 || options.sample_intervals < 1 ||
        options.time_intervals % options.sample_intervals != 0)
        throw std::invalid_argument("time_intervals must be a positive multiple of sample_intervals");

    const int dim = output.dim();
    const int M = options.truncation > 0 ? options.truncation : 4 * output.inv_eps();
    const std::size_t n_modes_1d = static_cast<std::size_t>(M) + 1;
    const std::size_t n_modes = continuous_mode_count(dim, M);
    const std::size_t P = 2 * n_modes_1d;
    std::size_t n_colloc = 1;
    for (int a = 0; a < dim; ++a) n_colloc *= P;
    constexpr double pi = std::numbers::pi;

    // collocation synthesis (P x modes) and midpoint analysis (modes x P)
    std::vector<double> synth(P * n_modes_1d), analysis(n_modes_1d * P);
    for (std::size_t p = 0; p < P; ++p) {
        const double x = (p + 0.5) / static_cast<double>(P);
        for (std::size_t m = 0; m < n_modes_1d; ++m) {
            const double v = cosine_mode(static_cast<int>(m), x);
            synth[p * n_modes_1d + m] = v;
            analysis[m * P + p] = v / static_cast<double>(P);
        }
    }

    // Initial coefficients by composite Gauss quadrature, one cell per mode.
    const QuadratureRule rule = gauss_legendre_unit(5);
    const std::size_t q_cells = n_modes_1d;
    const std::size_t nq = q_cells * rule.nodes.size();
    std::vector<double> q_nodes(nq), q_weights(nq);
    for (std::size_t c = 0; c < q_cells; ++c)
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
            q_nodes[c * rule.nodes.size() + g] = (c + rule.nodes[g]) / static_cast<double>(q_cells);
            q_weights[c * rule.nodes.size() + g] = rule.weights[g] / static_cast<double>(q_cells);
        }
    std::vector<double> q_matrix(n_modes_1d * nq);
    for (std::size_t m = 0; m < n_modes_1d; ++m)
        for (std::size_t n = 0; n < nq; ++n)
            q_matrix[m * nq + n] = q_weights[n] * cosine_mode(static_cast<int>(m), q_nodes[n]);

    std::size_t nq_total = 1;
    for (int a = 0; a < dim; ++a) nq_total *= nq;
    std::array<std::vector<double>, 3> u0;
    double tail = 0.0;
    const SpatialFunction* fns[3] = {&initial.s0, &initial.i0, &initial.r0};
    for (int c = 0; c < 3; ++c) {
        std::vector<double> values(nq_total);
        double norm2 = 0.0;
        for (std::size_t k = 0; k < nq_total; ++k) {
            Point x{0.0, 0.0, 0.0};
            double w = 1.0;
            std::size_t rest = k;
            for (int a = 0; a < dim; ++a) {
                x[a] = q_nodes[rest % nq];
                w *= q_weights[rest % nq];
                rest /= nq;
            }
            values[k] = (*fns[c])(x);
            norm2 += w * values[k] * values[k];
        }
        u0[c] = apply_all_axes(shaped(dim, nq, std::move(values)), q_matrix, n_modes_1d).data;
        double kept = 0.0;
        for (double v : u0[c]) kept += v * v;
        tail += std::max(0.0, norm2 - kept);
    }

    // Per-component exponential-trapezoid weights over one time step.
    const int K = options.time_intervals;
    const double h = horizon / K;
    const std::array<double, 3> mu = params.mu();
    std::array<std::vector<double>, 3> decay, w_left, w_right;
    for (int c = 0; c < 3; ++c) {
        decay[c].resize(n_modes);
        w_left[c].resize(n_modes);
        w_right[c].resize(n_modes);
        for (std::size_t m = 0; m < n_modes; ++m) {
            const double z = mu[c] * eig_continuous(continuous_mode(dim, M, m)) * h;
            decay[c][m] = std::exp(-z);
            w_left[c][m] = h * psi(z);
            w_right[c][m] = h * (phi1(z) - psi(z));
        }
    }

    const double beta = params.beta(Point{0.5, 0.5, 0.5});
    const double alpha = params.alpha(Point{0.5, 0.5, 0.5});
    const std::vector<double> beta_v(n_colloc, beta), alpha_v(n_colloc, alpha);
    const auto& kern = kernels::active();

    // Reaction term in coefficient space for one time node.
    const auto reaction = [&](const std::array<std::vector<double>, 3>& u) {
        std::array<std::vector<double>, 3> vals;
        for (int c = 0; c < 3; ++c) vals[c] = apply_all_axes(shaped(dim, n_modes_1d, u[c]), synth, P).data;
        std::array<std::vector<double>, 3> g;
        for (auto& v : g) v.assign(n_colloc, 0.0);
        kernels::ReactionBuffers buf{vals[0].data(), vals[1].data(), vals[2].data(), beta_v.data(),
                                     alpha_v.data(), g[0].data(),    g[1].data(),    g[2].data()};
        kern.reaction(buf, n_colloc);
        for (int c = 0; c < 3; ++c) g[c] = apply_all_axes(shaped(dim, P, std::move(g[c])), analysis, n_modes_1d).data;
        return g;
    };

    using Nodes = std::vector<std::array<std::vector<double>, 3>>;
    Nodes u(static_cast<std::size_t>(K) + 1, u0);
    Nodes g(u.size());

    ReferenceSolution ref;
    ref.route = ReferenceRoute::SpectralPicard;
    ref.grid = output;
    ref.truncation = M;
    ref.tail_energy = tail;

    for (int sweep = 1; sweep <= options.max_iterations; ++sweep) {
        for (std::size_t n = 0; n < u.size(); ++n) g[n] = reaction(u[n]);

        double residual = 0.0;
        std::array<std::vector<double>, 3> v = u0;
        for (std::size_t n = 0; n < u.size(); ++n) {
            if (n > 0) {
                for (int c = 0; c < 3; ++c)
                    for (std::size_t m = 0; m < n_modes; ++m)
                        v[c][m] = decay[c][m] * v[c][m] + w_left[c][m] * g[n - 1][c][m] +
                                  w_right[c][m] * g[n][c][m];
            }
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c)
                for (std::size_t m = 0; m < n_modes; ++m) {
                    const double d = v[c][m] - u[n][c][m];
                    d2 += d * d;
                }
            residual = std::max(residual, std::sqrt(d2));
            u[n] = v;
        }
        ref.residuals.push_back(residual);
        ref.iterations = sweep;
        if (residual <= options.tolerance) break;
        if (sweep >= 5 && residual >= ref.residuals[ref.residuals.size() - 2]) {
            std::ostringstream os;
            os << "Picard iteration stalled at sweep " << sweep << " (residual " << residual << ", previous "
               << ref.residuals[ref.residuals.size() - 2] << ")";
            throw ConvergenceError(os.str());
        }
    }

    // Exact cell averages of each retained mode on the output lattice.
    const std::size_t n_out = static_cast<std::size_t>(output.inv_eps());
    const double eps = output.eps();
    std::vector<double> averages(n_out * n_modes_1d);
    for (std::size_t i = 0; i < n_out; ++i) {
        averages[i * n_modes_1d] = 1.0;
        for (std::size_t m = 1; m < n_modes_1d; ++m) {
            const double k = m * pi;
            averages[i * n_modes_1d + m] =
                std::numbers::sqrt2 * (std::sin(k * (i + 1) * eps) - std::sin(k * i * eps)) / (k * eps);
        }
    }

    const int stride = K / options.sample_intervals;
    for (int j = 0; j <= options.sample_intervals; ++j) {
        const auto& coeffs = u[static_cast<std::size_t>(j * stride)];
        PatchState x(output);
        for (int c = 0; c < 3; ++c) {
            std::vector<double> vals = apply_all_axes(shaped(dim, n_modes_1d, coeffs[c]), averages, n_out).data;
            std::copy(vals.begin(), vals.end(), x.component(c).values().begin());
        }
        ref.trajectory.push(horizon * j / options.sample_intervals, std::move(x));
    }
    return ref;
}

DiscretizationRow compare_to_reference(const Trajectory& coarse, const ReferenceSolution& reference) {
    const Trajectory& ref = reference.trajectory;
    if (coarse.size() != ref.size()) throw std::invalid_argument("trajectories have different sample counts");
    const GridSpec& grid = coarse.states.front().grid();
    DiscretizationRow row;
    row.inv_eps = grid.inv_eps();
    row.eps = grid.eps();
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        if (std::abs(coarse.times[k] - ref.times[k]) > 1e-12 * std::max(1.0, ref.times[k]))
            throw std::invalid_argument("trajectories are sampled at different times");
        const PatchState diff = difference(coarse.states[k], reference.at(k, grid));
        const double es = sup_norm(diff.s), ei = sup_norm(diff.i), er = sup_norm(diff.r);
        row.sup_error_S = std::max(row.sup_error_S, es);
        row.sup_error_I = std::max(row.sup_error_I, ei);
        row.sup_error_R = std::max(row.sup_error_R, er);
        row.sup_error_total = std::max(row.sup_error_total, es + ei + er);
    }
    return row;
}

DiscretizationStudy discretization_study(const ModelParams& params, const InitialData& initial, int dim,
                                         Boundary boundary, double horizon, const std::vector<int>& inv_eps_list,
                                         int inv_eps_ref, const StudyOptions& options) {
    if (inv_eps_list.empty()) throw std::invalid_argument("mesh list is empty");
    const GridSpec ref_grid = GridSpec::build(dim, inv_eps_ref, boundary);
    std::vector<GridSpec> grids;
    for (int inv : inv_eps_list) {
        const GridSpec g = GridSpec::build(dim, inv, boundary);
        if (!ref_grid.refines(g)) {
            std::ostringstream os;
            os << "mesh 1/" << inv << " is not nested in the reference mesh 1/" << inv_eps_ref;
            throw std::invalid_argument(os.str());
        }
        grids.push_back(g);
    }

    const ReferenceSolution reference = solve_reference_fine(params, initial, ref_grid, horizon, options.integration);

    DiscretizationStudy study;
    study.inv_eps_ref = inv_eps_ref;
    study.dt = reference.dt;
    study.sample_intervals = options.integration.sample_intervals;
    study.rows.resize(grids.size());
    parallel_for(grids.size(), options.threads, [&](std::size_t k) {
        const PatchState x0 = project_initial(initial, grids[k], options.integration.quad_order);
        const Trajectory traj = integrate(params, x0, horizon, options.integration);
        study.rows[k] = compare_to_reference(traj, reference);
    });
    return study;
}

}  // namespace sirlab
