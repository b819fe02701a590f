#pragma once

// Exact simulation of the spatial stochastic SIR jump process (Gillespie
// direct method).
//
// Channels at site i:
//   infection   beta_i S I / (S + I + R)      S -1, I +1
//   recovery    alpha_i I                     I -1, R +1
//   migration   (mu_J / eps^2) J per directed edge, J -1 at i, J +1 at the neighbour
// Neumann grids have no channel across the boundary; periodic grids wrap.
//
// Sampled densities are count / N, so the step function integrates to
// (total count) / (N eps^-d) = 1.

#include "sirlab/grid.hpp"
#include "sirlab/model.hpp"
#include "sirlab/rng.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sirlab {

using Count = std::int64_t;

struct CountsState {
    GridSpec grid;
    Count N = 0;
    std::vector<Count> s;
    std::vector<Count> i;
    std::vector<Count> r;
    /// N * eps^-d; fixed for the life of the process.
    Count total = 0;

    CountsState() = default;
    CountsState(const GridSpec& g, Count n);

    std::vector<Count>& component(int c) { return c == 0 ? s : (c == 1 ? i : r); }
    const std::vector<Count>& component(int c) const { return c == 0 ? s : (c == 1 ? i : r); }

    /// Sum over sites and compartments.
    Count count_all() const;
    /// count / N per site.
    PatchState renormalized() const;
};

enum class InitialMode {
    /// N eps^-d i.i.d. draws over the 3 eps^-d (compartment, cell) categories.
    Multinomial,
    /// Largest-remainder rounding of N * (cell average density); no sampling noise.
    Rounded,
};

/// Probabilities int_{V_i} s0, int_{V_i} i0, int_{V_i} r0 (compartment-major, then site).
/// Throws if any is negative or they do not sum to 1 within 1e-6.
std::vector<double> initial_cell_probabilities(const InitialData& initial, const GridSpec& grid, int quad_order = 5);

CountsState sample_initial(Count N, const GridSpec& grid, const InitialData& initial, Rng& rng);
CountsState rounded_initial(Count N, const GridSpec& grid, const InitialData& initial);

enum class ChannelKind : std::uint8_t { Infection, Recovery, Migration };

struct EventChannel {
    ChannelKind kind = ChannelKind::Infection;
    /// 0 = S, 1 = I, 2 = R for migrations; unused otherwise.
    int compartment = 0;
    std::size_t site = 0;
    /// Migration only: 2 * axis + (sign > 0) and the receiving site.
    int slot = 0;
    std::size_t to = 0;
    double rate = 0.0;
};

/// Identity of a selected channel (rate omitted).
struct Event {
    ChannelKind kind = ChannelKind::Infection;
    int compartment = 0;
    std::size_t site = 0;
    int slot = 0;
    std::size_t to = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

class RateOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sum tree over sites. A leaf holds the total rate of every channel at its
/// site; selection descends the tree, then splits the leaf interval among the
/// site's infection, recovery and per-compartment migration groups, and picks
/// the edge uniformly within a migration group (all edges of a group share
/// one rate).
class RateIndex {
public:
    RateIndex() = default;
    RateIndex(const CountsState& state, const ModelParams& params);

    double total_rate() const noexcept { return tree_[1]; }
    double site_rate(std::size_t site) const { return tree_[leaves_ + site]; }
    std::size_t n_sites() const noexcept { return sites_.size(); }

    /// Recompute one site's leaf from the counts and refresh its ancestors.
    void update_site(const CountsState& state, std::size_t site);
    /// Recompute every leaf and internal node.
    void rebuild(const CountsState& state);
    /// Fresh sum of per-site rates (independent of the tree).
    double recomputed_total(const CountsState& state) const;

    /// Channel for a point u in [0, total_rate). Returns nullopt only when the
    /// point lands on a zero-rate leaf through rounding; the caller redraws.
    std::optional<Event> select(const CountsState& state, double u) const;

    /// Flat channel list: infection and recovery per site, then one migration
    /// channel per directed edge and compartment. Zero-rate channels included.
    std::vector<EventChannel> channels(const CountsState& state) const;

    /// Existing outgoing edges of a site (receiving site per slot).
    int degree(std::size_t site) const { return sites_[site].degree; }

private:
    struct SiteInfo {
        double beta;
        double alpha;
        int degree;
        std::array<std::uint32_t, 2 * kMaxDim> to;
        std::array<std::uint8_t, 2 * kMaxDim> slot;
    };

    double leaf_rate(const CountsState& state, std::size_t site) const;

    std::vector<SiteInfo> sites_;
    std::array<double, 3> migration_{0.0, 0.0, 0.0};  // mu_J / eps^2
    std::size_t leaves_ = 1;
    std::vector<double> tree_{0.0, 0.0};
};

/// Apply one event's stoichiometry. Throws std::logic_error on a negative count.
void apply_event(CountsState& state, const Event& event);

struct StepResult {
    Event event;
    double dt;
};

/// One Gillespie step. Returns nullopt (state untouched) when total_rate is 0.
std::optional<StepResult> step(CountsState& state, RateIndex& index, Rng& rng);

struct SimOptions {
    InitialMode initial_mode = InitialMode::Multinomial;
    /// Also record int_0^t b_eps(Z(r)) dr exactly along the path (for the martingale).
    bool record_compensator = false;
};

struct SimOutput {
    std::vector<double> times;
    /// count / N per sample time.
    std::vector<PatchState> states;
    /// Events executed up to each sample time.
    std::vector<std::uint64_t> events_at;
    std::uint64_t event_count = 0;
    std::uint64_t seed = 0;
    Count N = 0;
    /// int_0^t b_eps(Z) dr at each sample time, when requested.
    std::vector<PatchState> compensator;
};

/// Runs the process from its initial law to the horizon, recording the
/// renormalized state at each sample time (the state just after all events
/// at times <= t). `sample_times` must be nondecreasing within [0, horizon].
SimOutput simulate(Count N, const ModelParams& params, const InitialData& initial, const GridSpec& grid,
                   double horizon, const std::vector<double>& sample_times, std::uint64_t seed,
                   const SimOptions& options = {});

/// Same, starting from a given state.
SimOutput simulate_from(CountsState state, const ModelParams& params, double horizon,
                        const std::vector<double>& sample_times, Rng rng, const SimOptions& options = {});

enum class CompensatorQuadrature {
    /// Trapezoid rule on the recorded sample grid.
    Trapezoid,
    /// The exact path integral recorded during the run.
    Exact,
};

/// M(t) = Z(t) - Z(0) - int_0^t b_eps(Z(r)) dr with b_eps = Delta~_eps Z + G(Z),
/// per sample time. Trapezoid needs at least 256 samples; Exact needs a run
/// with record_compensator.
std::vector<PatchState> compensated_martingale(const SimOutput& out, const ModelParams& params,
                                               CompensatorQuadrature quadrature = CompensatorQuadrature::Trapezoid);

/// Minimum sample count accepted by the trapezoid compensator.
inline constexpr std::size_t kMinDenseSamples = 256;

}  // namespace sirlab
