#include "sirlab/ssa.hpp"

#include "sirlab/patch_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sirlab {

CountsState::CountsState(const GridSpec& g, Count n)
    : grid(g), N(n), s(g.n_sites(), 0), i(g.n_sites(), 0), r(g.n_sites(), 0),
      total(n * static_cast<Count>(g.n_sites())) {
    if (n < 1) throw std::invalid_argument("N must be >= 1");
}

Count CountsState::count_all() const {
    return std::accumulate(s.begin(), s.end(), Count{0}) + std::accumulate(i.begin(), i.end(), Count{0}) +
           std::accumulate(r.begin(), r.end(), Count{0});
}

PatchState CountsState::renormalized() const {
    PatchState x(grid);
    const double inv_n = 1.0 / static_cast<double>(N);
    for (int c = 0; c < 3; ++c) {
        const auto& counts = component(c);
        double* out = x.component(c).data();
        for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]) * inv_n;
    }
    return x;
}

std::vector<double> initial_cell_probabilities(const InitialData& initial, const GridSpec& grid, int quad_order) {
    const PatchState projected = project_initial(initial, grid, quad_order);
    std::vector<double> p(3 * grid.n_sites());
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < grid.n_sites(); ++k) {
            const double v = projected.component(c)[k] * grid.cell_volume();
            if (!(v >= 0.0)) throw std::invalid_argument("initial densities must be nonnegative");
            p[c * grid.n_sites() + k] = v;
            sum += v;
        }
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "initial densities integrate to " << sum << ", expected 1 (normalize the scenario first)";
        throw std::invalid_argument(os.str());
    }
    return p;
}

CountsState sample_initial(Count N, const GridSpec& grid, const InitialData& initial, Rng& rng) {
    CountsState state(grid, N);
    std::vector<double> cumulative = initial_cell_probabilities(initial, grid);
    std::partial_sum(cumulative.begin(), cumulative.end(), cumulative.begin());
    const std::size_t n = grid.n_sites();
    for (Count draw = 0; draw < state.total; ++draw) {
        const std::size_t k = rng.categorical(cumulative);
        ++state.component(static_cast<int>(k / n))[k % n];
    }
    return state;
}

CountsState rounded_initial(Count N, const GridSpec& grid, const InitialData& initial) {
    CountsState state(grid, N);
    const std::vector<double> p = initial_cell_probabilities(initial, grid);
    const double total = static_cast<double>(state.total);
    std::vector<Count> counts(p.size());
    std::vector<std::pair<double, std::size_t>> remainders(p.size());
    Count assigned = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double target = total * p[k];
        counts[k] = static_cast<Count>(std::floor(target));
        remainders[k] = {target - static_cast<double>(counts[k]), k};
        assigned += counts[k];
    }
    // largest remainder first, ties by category index
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (Count extra = 0; assigned + extra < state.total; ++extra)
        ++counts[remainders[static_cast<std::size_t>(extra) % remainders.size()].second];
    const std::size_t n = grid.n_sites();
    for (std::size_t k = 0; k < p.size(); ++k) state.component(static_cast<int>(k / n))[k % n] = counts[k];
    return state;
}

RateIndex::RateIndex(const CountsState& state, const ModelParams& params) {
    params.validate();
    const GridSpec& grid = state.grid;
    const SiteRates rates = sample_rates(params, grid);
    const double inv_eps2 = static_cast<double>(grid.inv_eps()) * grid.inv_eps();
    migration_ = {params.mu_S * inv_eps2, params.mu_I * inv_eps2, params.mu_R * inv_eps2};

    sites_.resize(grid.n_sites());
    for (std::size_t site = 0; site < grid.n_sites(); ++site) {
        SiteInfo& info = sites_[site];
        info.beta = rates.beta[site];
        info.alpha = rates.alpha[site];
        info.degree = 0;
        const SiteNeighborhood nb = grid.neighborhood(site);
        for (int slot = 0; slot < 2 * grid.dim(); ++slot) {
            const Link& l = nb.links[slot];
            // no channel through a reflecting wall, and a one-cell periodic axis has only self-loops
            if (l.kind == LinkKind::Ghost || l.other == site) continue;
            info.to[info.degree] = static_cast<std::uint32_t>(l.other);
            info.slot[info.degree] = static_cast<std::uint8_t>(slot);
            ++info.degree;
        }
    }
    leaves_ = 1;
    while (leaves_ < sites_.size()) leaves_ *= 2;
    rebuild(state);
}

inline double RateIndex::leaf_rate(const CountsState& state, std::size_t site) const {
    const SiteInfo& info = sites_[site];
    const Count S = state.s[site], I = state.i[site], R = state.r[site];
    const Count sum = S + I + R;
    const double inf = sum > 0 ? info.beta * static_cast<double>(S) * static_cast<double>(I) / static_cast<double>(sum)
                               : 0.0;
    const double rec = info.alpha * static_cast<double>(I);
    const double deg = info.degree;
    return inf + rec + migration_[0] * static_cast<double>(S) * deg + migration_[1] * static_cast<double>(I) * deg +
           migration_[2] * static_cast<double>(R) * deg;
}

void RateIndex::update_site(const CountsState& state, std::size_t site) {
    std::size_t node = leaves_ + site;
    tree_[node] = leaf_rate(state, site);
    for (node /= 2; node >= 1; node /= 2) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    if (!std::isfinite(tree_[1])) {
        std::ostringstream os;
        os << "channel rates overflow at site " << site << " (counts x mu/eps^2 not representable)";
        throw RateOverflow(os.str());
    }
}

void RateIndex::rebuild(const CountsState& state) {
    tree_.assign(2 * leaves_, 0.0);
    for (std::size_t site = 0; site < sites_.size(); ++site) tree_[leaves_ + site] = leaf_rate(state, site);
    for (std::size_t node = leaves_ - 1; node >= 1; --node) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    if (!std::isfinite(tree_[1])) throw RateOverflow("channel rates overflow (counts x mu/eps^2 not representable)");
}

double RateIndex::recomputed_total(const CountsState& state) const {
    double acc = 0.0;
    for (std::size_t site = 0; site < sites_.size(); ++site) acc += leaf_rate(state, site);
    return acc;
}

std::optional<Event> RateIndex::select(const CountsState& state, double u) const {
    std::size_t node = 1;
    while (node < leaves_) {
        const double left = tree_[2 * node];
        if (u < left) {
            node = 2 * node;
        } else {
            u -= left;
            node = 2 * node + 1;
        }
    }
    const std::size_t site = node - leaves_;
    if (site >= sites_.size() || !(tree_[node] > 0.0)) return std::nullopt;

    const SiteInfo& info = sites_[site];
    const Count S = state.s[site], I = state.i[site], R = state.r[site];
    const Count sum = S + I + R;
    const double groups[5] = {
        sum > 0 ? info.beta * static_cast<double>(S) * static_cast<double>(I) / static_cast<double>(sum) : 0.0,
        info.alpha * static_cast<double>(I),
        migration_[0] * static_cast<double>(S) * info.degree,
        migration_[1] * static_cast<double>(I) * info.degree,
        migration_[2] * static_cast<double>(R) * info.degree,
    };
    int g = 0;
    for (; g < 4; ++g) {
        if (u < groups[g]) break;
        u -= groups[g];
    }
    // rounding can push u past the last group; fall back to the last nonzero one
    while (g > 0 && !(groups[g] > 0.0)) --g;
    if (!(groups[g] > 0.0)) return std::nullopt;

    Event e;
    e.site = site;
    if (g == 0) {
        e.kind = ChannelKind::Infection;
    } else if (g == 1) {
        e.kind = ChannelKind::Recovery;
    } else {
        e.kind = ChannelKind::Migration;
        e.compartment = g - 2;
        const double per_edge = groups[g] / info.degree;
        const int k = std::min(static_cast<int>(std::max(u, 0.0) / per_edge), info.degree - 1);
        e.slot = info.slot[k];
        e.to = info.to[k];
    }
    return e;
}

std::vector<EventChannel> RateIndex::channels(const CountsState& state) const {
    std::vector<EventChannel> out;
    for (std::size_t site = 0; site < sites_.size(); ++site) {
        const SiteInfo& info = sites_[site];
        const Count S = state.s[site], I = state.i[site], R = state.r[site];
        const Count sum = S + I + R;
        EventChannel inf;
        inf.kind = ChannelKind::Infection;
        inf.site = site;
        inf.rate = sum > 0 ? info.beta * static_cast<double>(S) * static_cast<double>(I) / static_cast<double>(sum)
                           : 0.0;
        out.push_back(inf);
        EventChannel rec;
        rec.kind = ChannelKind::Recovery;
        rec.site = site;
        rec.rate = info.alpha * static_cast<double>(I);
        out.push_back(rec);
    }
    for (std::size_t site = 0; site < sites_.size(); ++site) {
        const SiteInfo& info = sites_[site];
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < info.degree; ++k) {
                EventChannel m;
                m.kind = ChannelKind::Migration;
                m.compartment = c;
                m.site = site;
                m.slot = info.slot[k];
                m.to = info.to[k];
                m.rate = migration_[c] * static_cast<double>(state.component(c)[site]);
                out.push_back(m);
            }
        }
    }
    return out;
}

namespace {

inline void take(Count& c, const char* what) {
    if (c <= 0) throw std::logic_error(std::string("event would make a ") + what + " count negative");
    --c;
}

}  // namespace

void apply_event(CountsState& state, const Event& e) {
    switch (e.kind) {
        case ChannelKind::Infection:
            take(state.s[e.site], "S");
            ++state.i[e.site];
            break;
        case ChannelKind::Recovery:
            take(state.i[e.site], "I");
            ++state.r[e.site];
            break;
        case ChannelKind::Migration: {
            auto& counts = state.component(e.compartment);
            take(counts[e.site], "migrating");
            ++counts[e.to];
            break;
        }
    }
}

std::optional<StepResult> step(CountsState& state, RateIndex& index, Rng& rng) {
    const double total = index.total_rate();
    if (!(total > 0.0)) return std::nullopt;
    const double dt = rng.exponential(total);
    std::optional<Event> e;
    while (!(e = index.select(state, rng.uniform() * total))) {
    }
    apply_event(state, *e);
    index.update_site(state, e->site);
    if (e->kind == ChannelKind::Migration) index.update_site(state, e->to);
    return StepResult{*e, dt};
}

namespace {

constexpr std::uint64_t kRebuildEvery = std::uint64_t{1} << 20;
constexpr std::uint64_t kConservationEvery = std::uint64_t{1} << 16;

// Lazily integrated per-site occupation times, for the exact compensator.
class PathIntegrals {
public:
    PathIntegrals(const CountsState& state, const ModelParams& params)
        : grid_(state.grid), params_(params), rates_(sample_rates(params, state.grid)),
          inv_n_(1.0 / static_cast<double>(state.N)), acc_(state.grid.n_sites()), last_(state.grid.n_sites(), 0.0) {}

    // Accumulate the site's current occupation up to time t.
    void advance(const CountsState& state, std::size_t site, double t) {
        const double h = t - last_[site];
        if (h <= 0.0) return;
        const double S = static_cast<double>(state.s[site]) * inv_n_;
        const double I = static_cast<double>(state.i[site]) * inv_n_;
        const double R = static_cast<double>(state.r[site]) * inv_n_;
        const double sum = S + I + R;
        Acc& a = acc_[site];
        a.s += h * S;
        a.i += h * I;
        a.r += h * R;
        if (sum > 0.0) a.g += h * S * I / sum;
        last_[site] = t;
    }

    void advance_all(const CountsState& state, double t) {
        for (std::size_t site = 0; site < acc_.size(); ++site) advance(state, site, t);
    }

    // int_0^t b(Z) dr, assuming advance_all(t) was just called.
    PatchState integral() const {
        PatchState occ(grid_);
        for (std::size_t site = 0; site < acc_.size(); ++site) {
            occ.s[site] = acc_[site].s;
            occ.i[site] = acc_[site].i;
            occ.r[site] = acc_[site].r;
        }
        // b is affine in the occupation times except through g, which is tracked separately
        PatchState out(grid_);
        add_scaled_laplacian(occ.s, params_.mu_S, out.s.values());
        add_scaled_laplacian(occ.i, params_.mu_I, out.i.values());
        add_scaled_laplacian(occ.r, params_.mu_R, out.r.values());
        for (std::size_t site = 0; site < acc_.size(); ++site) {
            const double inf = rates_.beta[site] * acc_[site].g;
            const double rec = rates_.alpha[site] * acc_[site].i;
            out.s[site] -= inf;
            out.i[site] += inf - rec;
            out.r[site] += rec;
        }
        return out;
    }

private:
    struct Acc {
        double s = 0.0, i = 0.0, r = 0.0, g = 0.0;
    };
    GridSpec grid_;
    ModelParams params_;
    SiteRates rates_;
    double inv_n_;
    std::vector<Acc> acc_;
    std::vector<double> last_;
};

void check_conservation(const CountsState& state, std::uint64_t events) {
    if (state.count_all() != state.total) {
        std::ostringstream os;
        os << "total count drifted to " << state.count_all() << " (expected " << state.total << ") after " << events
           << " events";
        throw std::logic_error(os.str());
    }
}

}  // namespace

SimOutput simulate_from(CountsState state, const ModelParams& params, double horizon,
                        const std::vector<double>& sample_times, Rng rng, const SimOptions& options) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        if (!(sample_times[k] >= 0.0 && sample_times[k] <= horizon))
            throw std::invalid_argument("sample times must lie in [0, horizon]");
        if (k > 0 && sample_times[k] < sample_times[k - 1])
            throw std::invalid_argument("sample times must be nondecreasing");
    }
    check_conservation(state, 0);

    RateIndex index(state, params);
    std::optional<PathIntegrals> path;
    if (options.record_compensator) path.emplace(state, params);

    SimOutput out;
    out.N = state.N;
    out.seed = rng.key();
    out.times = sample_times;
    out.states.reserve(sample_times.size());
    out.events_at.reserve(sample_times.size());

    std::size_t next = 0;
    std::uint64_t events = 0;
    const auto record_until = [&](double limit) {
        while (next < sample_times.size() && sample_times[next] < limit) {
            out.states.push_back(state.renormalized());
            out.events_at.push_back(events);
            if (path) {
                path->advance_all(state, sample_times[next]);
                out.compensator.push_back(path->integral());
            }
            ++next;
        }
    };

    double t = 0.0;
    for (;;) {
        const double total = index.total_rate();
        if (!(total > 0.0)) break;  // absorbed: the state holds to the horizon
        const double t_next = t + rng.exponential(total);
        record_until(t_next);
        if (t_next > horizon) break;

        std::optional<Event> e;
        while (!(e = index.select(state, rng.uniform() * total))) {
        }
        if (path) {
            path->advance(state, e->site, t_next);
            if (e->kind == ChannelKind::Migration) path->advance(state, e->to, t_next);
        }
        apply_event(state, *e);
        index.update_site(state, e->site);
        if (e->kind == ChannelKind::Migration) index.update_site(state, e->to);
        t = t_next;
        ++events;

        if ((events & (kConservationEvery - 1)) == 0) check_conservation(state, events);
        if ((events & (kRebuildEvery - 1)) == 0) index.rebuild(state);
    }
    record_until(std::numeric_limits<double>::infinity());
    check_conservation(state, events);
    out.event_count = events;
    return out;
}

SimOutput simulate(Count N, const ModelParams& params, const InitialData& initial, const GridSpec& grid,
                   double horizon, const std::vector<double>& sample_times, std::uint64_t seed,
                   const SimOptions& options) {
    Rng rng(seed);
    CountsState state = options.initial_mode == InitialMode::Multinomial ? sample_initial(N, grid, initial, rng)
                                                                         : rounded_initial(N, grid, initial);
    // the initial draw and the dynamics share one stream
    SimOutput out = simulate_from(std::move(state), params, horizon, sample_times, rng, options);
    out.seed = seed;
    return out;
}

std::vector<PatchState> compensated_martingale(const SimOutput& out, const ModelParams& params,
                                               CompensatorQuadrature quadrature) {
    if (out.states.empty()) throw std::invalid_argument("simulation output has no samples");
    const PatchState& z0 = out.states.front();
    std::vector<PatchState> m;
    m.reserve(out.states.size());

    if (quadrature == CompensatorQuadrature::Exact) {
        if (out.compensator.size() != out.states.size())
            throw std::invalid_argument("exact compensator was not recorded for this run");
        for (std::size_t k = 0; k < out.states.size(); ++k) {
            PatchState d = difference(out.states[k], z0);
            m.push_back(difference(d, out.compensator[k]));
        }
        return m;
    }

    if (out.states.size() < kMinDenseSamples) {
        std::ostringstream os;
        os << "compensator needs at least " << kMinDenseSamples << " samples, got " << out.states.size();
        throw std::invalid_argument(os.str());
    }
    const PatchSystem system(params, z0.grid());
    const GridSpec& grid = z0.grid();
    PatchState integral(grid), b_prev(grid), b_next(grid);
    system.rhs(out.states.front(), b_prev);
    m.push_back(PatchState(grid));
    for (std::size_t k = 1; k < out.states.size(); ++k) {
        system.rhs(out.states[k], b_next);
        const double half = 0.5 * (out.times[k] - out.times[k - 1]);
        for (int c = 0; c < 3; ++c)
            for (std::size_t site = 0; site < grid.n_sites(); ++site)
                integral.component(c)[site] += half * (b_prev.component(c)[site] + b_next.component(c)[site]);
        m.push_back(difference(difference(out.states[k], z0), integral));
        std::swap(b_prev, b_next);
    }
    return m;
}

}  // namespace sirlab
