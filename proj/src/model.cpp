#include "sirlab/model.hpp"

#include "sirlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sirlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_finite_nonneg(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

}  // namespace

SpatialFunction::SpatialFunction(Spec spec) : spec_(std::move(spec)) {
    std::visit(overloaded{
                   [](const Constant& c) { check_finite_nonneg(c.value, "constant value"); },
                   [](const GaussianBump& g) {
                       if (g.dim < 1 || g.dim > kMaxDim) throw std::invalid_argument("gaussian dim must be 1..3");
                       if (!(g.width > 0.0) || !std::isfinite(g.width))
                           throw std::invalid_argument("gaussian width must be positive");
                       check_finite_nonneg(g.base, "gaussian base");
                       check_finite_nonneg(g.peak, "gaussian peak");
                   },
                   [](const Raster& r) {
                       if (r.dim < 1 || r.dim > kMaxDim || r.inv_eps < 1)
                           throw std::invalid_argument("raster needs dim in 1..3 and inv_eps >= 1");
                       std::size_t expected = 1;
                       for (int a = 0; a < r.dim; ++a) expected *= static_cast<std::size_t>(r.inv_eps);
                       if (r.values.size() != expected)
                           throw std::invalid_argument("raster has " + std::to_string(r.values.size()) +
                                                       " values, expected " + std::to_string(expected));
                       for (double v : r.values) check_finite_nonneg(v, "raster value");
                   },
               },
               spec_);
}

double SpatialFunction::operator()(const Point& x) const {
    return std::visit(overloaded{
                          [](const Constant& c) { return c.value; },
                          [&](const GaussianBump& g) {
                              double r2 = 0.0;
                              for (int a = 0; a < g.dim; ++a) {
                                  const double dx = x[a] - g.center[a];
                                  r2 += dx * dx;
                              }
                              return g.base + g.peak * std::exp(-r2 / (2.0 * g.width * g.width));
                          },
                          [&](const Raster& r) {
                              std::size_t site = 0;
                              std::size_t stride = 1;
                              for (int a = 0; a < r.dim; ++a) {
                                  int c = static_cast<int>(std::floor(x[a] * r.inv_eps));
                                  c = std::clamp(c, 0, r.inv_eps - 1);
                                  site += static_cast<std::size_t>(c) * stride;
                                  stride *= static_cast<std::size_t>(r.inv_eps);
                              }
                              return r.values[site];
                          },
                      },
                      spec_);
}

int SpatialFunction::dim() const noexcept {
    if (const auto* g = std::get_if<GaussianBump>(&spec_)) return g->dim;
    if (const auto* r = std::get_if<Raster>(&spec_)) return r->dim;
    return 0;
}

double SpatialFunction::sup() const {
    return std::visit(overloaded{
                          [](const Constant& c) { return c.value; },
                          [](const GaussianBump& g) { return g.base + g.peak; },
                          [](const Raster& r) { return *std::max_element(r.values.begin(), r.values.end()); },
                      },
                      spec_);
}

SpatialFunction SpatialFunction::scaled(double factor) const {
    check_finite_nonneg(factor, "scale factor");
    return std::visit(overloaded{
                          [&](Constant c) {
                              c.value *= factor;
                              return SpatialFunction(c);
                          },
                          [&](GaussianBump g) {
                              g.base *= factor;
                              g.peak *= factor;
                              return SpatialFunction(g);
                          },
                          [&](Raster r) {
                              for (double& v : r.values) v *= factor;
                              return SpatialFunction(std::move(r));
                          },
                      },
                      spec_);
}

std::string SpatialFunction::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Constant& c) { os << "constant(" << c.value << ")"; },
                   [&](const GaussianBump& g) {
                       os << "gaussian(center=[";
                       for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << g.center[a];
                       os << "], width=" << g.width << ", base=" << g.base << ", peak=" << g.peak << ")";
                   },
                   [&](const Raster& r) { os << "raster(d=" << r.dim << ", 1/" << r.inv_eps << ")"; },
               },
               spec_);
    return os.str();
}

void ModelParams::validate() const {
    const std::pair<double, const char*> mus[] = {{mu_S, "mu_S"}, {mu_I, "mu_I"}, {mu_R, "mu_R"}};
    for (auto [v, name] : mus)
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
    if (!std::isfinite(beta.sup())) throw std::invalid_argument("beta must be bounded");
    if (!std::isfinite(alpha.sup())) throw std::invalid_argument("alpha must be bounded");
}

double ModelParams::mu_max() const noexcept { return std::max({mu_S, mu_I, mu_R}); }

double InitialData::total_mass(int dim) const {
    const int resolution = dim < 3 ? 64 : 32;
    const GridSpec g = GridSpec::build(dim, resolution);
    const auto sum = [&](const SpatialFunction& fn) {
        return integral(project([&](const Point& x) { return fn(x); }, g, 5));
    };
    return sum(s0) + sum(i0) + sum(r0);
}

InitialData InitialData::scaled(double factor) const {
    return InitialData{s0.scaled(factor), i0.scaled(factor), r0.scaled(factor)};
}

SiteRates sample_rates(const ModelParams& params, const GridSpec& grid) {
    SiteRates rates;
    rates.beta.resize(grid.n_sites());
    rates.alpha.resize(grid.n_sites());
    for (std::size_t site = 0; site < grid.n_sites(); ++site) {
        const Point c = grid.cell_center(site);
        rates.beta[site] = params.beta(c);
        rates.alpha[site] = params.alpha(c);
    }
    return rates;
}

PatchState::PatchState(Field s_, Field i_, Field r_) : s(std::move(s_)), i(std::move(i_)), r(std::move(r_)) {
    require_same_grid(s.grid(), i.grid(), "PatchState");
    require_same_grid(s.grid(), r.grid(), "PatchState");
}

double mass(const PatchState& x) { return integral(x.s) + integral(x.i) + integral(x.r); }

double sup_norm_triple(const PatchState& x) { return sup_norm(x.s) + sup_norm(x.i) + sup_norm(x.r); }

double l1_norm(const PatchState& x) { return l1_norm(x.s.values()) + l1_norm(x.i.values()) + l1_norm(x.r.values()); }

double min_component(const PatchState& x) {
    const auto& k = kernels::active();
    return std::min({k.min_value(x.s.data(), x.s.size()), k.min_value(x.i.data(), x.i.size()),
                     k.min_value(x.r.data(), x.r.size())});
}

PatchState difference(const PatchState& a, const PatchState& b) {
    require_same_grid(a.grid(), b.grid(), "difference");
    PatchState out(a.grid());
    const auto& k = kernels::active();
    for (int c = 0; c < 3; ++c)
        k.lincomb(out.component(c).data(), a.component(c).data(), -1.0, b.component(c).data(), a.s.size());
    return out;
}

PatchState project_initial(const InitialData& data, const GridSpec& grid, int quad_order) {
    const auto proj = [&](const SpatialFunction& fn) {
        return project([&](const Point& x) { return fn(x); }, grid, quad_order);
    };
    return PatchState(proj(data.s0), proj(data.i0), proj(data.r0));
}

void Trajectory::push(double t, PatchState state) {
    if (times.empty() ? t != 0.0 : !(t > times.back()))
        throw std::logic_error("trajectory times must start at 0 and increase strictly");
    times.push_back(t);
    states.push_back(std::move(state));
}

std::vector<double> uniform_times(double horizon, int intervals) {
    if (intervals < 1) throw std::invalid_argument("sample interval count must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
    for (int k = 0; k <= intervals; ++k) t[k] = horizon * k / intervals;
    return t;
}

}  // namespace sirlab
