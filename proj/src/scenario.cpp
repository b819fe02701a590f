#include "sirlab/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace sirlab {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash;
    return os.str();
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ScenarioError(path + ": " + what); }

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Object view that remembers which keys were read, so leftovers can be rejected.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    const std::string& path() const { return path_; }
    std::string at(std::string_view key) const { return join(path_, key); }

    const json* find(std::string_view key) {
        const auto it = j_.find(std::string(key));
        if (it == j_.end()) return nullptr;
        seen_.insert(std::string(key));
        return &*it;
    }
    const json& require(std::string_view key) {
        const json* v = find(key);
        if (!v) fail(at(key), "required key is missing");
        return *v;
    }

    double number(std::string_view key, std::optional<double> fallback = std::nullopt) {
        const json* v = fallback ? find(key) : &require(key);
        if (!v) return *fallback;
        if (!v->is_number()) fail(at(key), "expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) fail(at(key), "must be finite");
        return x;
    }
    double nonneg(std::string_view key, std::optional<double> fallback = std::nullopt) {
        const double x = number(key, fallback);
        if (x < 0.0) fail(at(key), "must be >= 0");
        return x;
    }
    long long integer(std::string_view key, std::optional<long long> fallback = std::nullopt) {
        const json* v = fallback ? find(key) : &require(key);
        if (!v) return *fallback;
        if (!v->is_number_integer()) fail(at(key), "expected an integer");
        return v->get<long long>();
    }
    bool boolean(std::string_view key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) fail(at(key), "expected true or false");
        return v->get<bool>();
    }
    std::string string(std::string_view key, std::optional<std::string> fallback = std::nullopt) {
        const json* v = fallback ? find(key) : &require(key);
        if (!v) return *fallback;
        if (!v->is_string()) fail(at(key), "expected a string");
        return v->get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(at(key), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<long long> integer_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of integers");
    std::vector<long long> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number_integer()) fail(path + "[" + std::to_string(k) + "]", "expected an integer");
        out.push_back(j[k].get<long long>());
    }
    return out;
}

SpatialFunction parse_function(const json& j, const std::string& path, int dim) {
    try {
        if (j.is_number()) {
            const double v = j.get<double>();
            if (!std::isfinite(v) || v < 0.0) fail(path, "must be finite and >= 0");
            return SpatialFunction::constant(v);
        }
        Fields f(j, path);
        const std::string type = f.string("type");
        SpatialFunction out;
        if (type == "constant") {
            out = SpatialFunction::constant(f.nonneg("value"));
        } else if (type == "gaussian") {
            SpatialFunction::GaussianBump g;
            const json& center = f.require("center");
            if (!center.is_array() || center.size() != static_cast<std::size_t>(dim))
                fail(f.at("center"), "expected an array of " + std::to_string(dim) + " numbers (one per axis)");
            g.dim = dim;
            for (int a = 0; a < dim; ++a) {
                if (!center[a].is_number()) fail(f.at("center"), "expected numbers");
                g.center[a] = center[a].get<double>();
            }
            g.width = f.number("width");
            g.base = f.nonneg("base", 0.0);
            g.peak = f.nonneg("peak");
            out = SpatialFunction(g);
        } else if (type == "raster") {
            SpatialFunction::Raster r;
            r.dim = dim;
            r.inv_eps = static_cast<int>(f.integer("inv_eps"));
            const json& values = f.require("values");
            if (!values.is_array()) fail(f.at("values"), "expected an array of numbers");
            for (const auto& v : values) {
                if (!v.is_number()) fail(f.at("values"), "expected numbers");
                r.values.push_back(v.get<double>());
            }
            out = SpatialFunction(r);
        } else {
            fail(f.at("type"), "unknown function type '" + type + "' (constant, gaussian, raster)");
        }
        f.finish();
        return out;
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
}

InitialMode parse_initial_mode(const std::string& text, const std::string& path) {
    if (text == "multinomial") return InitialMode::Multinomial;
    if (text == "rounded") return InitialMode::Rounded;
    fail(path, "expected 'multinomial' or 'rounded'");
}

Scenario build(const json& root, std::string_view source) {
    (void)source;
    Scenario sc;
    Fields top(root, "");

    const long long version = top.integer("schema_version");
    if (version != kScenarioSchemaVersion)
        fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                   std::to_string(kScenarioSchemaVersion) + ")");
    sc.name = top.string("name", std::string());

    {
        Fields g(top.require("grid"), "grid");
        const long long dim = g.integer("dim");
        const long long inv = g.integer("inv_eps");
        if (dim < 1 || dim > kMaxDim) fail(g.at("dim"), "must be 1, 2 or 3");
        if (inv < 1 || inv > (1 << 20)) fail(g.at("inv_eps"), "must be a positive integer");
        Boundary b = Boundary::Neumann;
        if (const json* bj = g.find("boundary")) {
            if (!bj->is_string()) fail(g.at("boundary"), "expected 'neumann' or 'periodic'");
            try {
                b = parse_boundary(bj->get<std::string>());
            } catch (const std::invalid_argument& e) {
                fail(g.at("boundary"), e.what());
            }
        }
        g.finish();
        sc.grid = GridSpec::build(static_cast<int>(dim), static_cast<int>(inv), b);
    }
    const int dim = sc.grid.dim();

    {
        Fields p(top.require("params"), "params");
        sc.params.beta = parse_function(p.require("beta"), p.at("beta"), dim);
        sc.params.alpha = parse_function(p.require("alpha"), p.at("alpha"), dim);
        sc.params.mu_S = p.nonneg("mu_S");
        sc.params.mu_I = p.nonneg("mu_I");
        sc.params.mu_R = p.nonneg("mu_R");
        p.finish();
    }

    {
        Fields in(top.require("initial"), "initial");
        InitialData data;
        data.s0 = parse_function(in.require("s0"), in.at("s0"), dim);
        const json* i0 = in.find("i0");
        data.i0 = i0 ? parse_function(*i0, in.at("i0"), dim) : SpatialFunction::constant(0.0);
        const json* r0 = in.find("r0");
        data.r0 = r0 ? parse_function(*r0, in.at("r0"), dim) : SpatialFunction::constant(0.0);
        in.finish();
        const double mass = data.total_mass(dim);
        if (!(mass > 0.0)) fail("initial", "densities integrate to zero; nothing to normalize");
        sc.normalization_factor = 1.0 / mass;
        sc.initial = sc.normalization_factor == 1.0 ? data : data.scaled(sc.normalization_factor);
    }

    sc.horizon = top.number("horizon");
    if (!(sc.horizon > 0.0)) fail("horizon", "must be positive");

    if (const json* s = top.find("sampling")) {
        Fields f(*s, "sampling");
        const long long count = f.integer("count", 64);
        if (count < 1 || count > (1 << 20)) fail(f.at("count"), "must be a positive integer");
        sc.sample_count = static_cast<int>(count);
        sc.dense = f.boolean("dense", false);
        f.finish();
    }

    if (const json* s = top.find("stochastic")) {
        Fields f(*s, "stochastic");
        sc.N = f.integer("N", 1000);
        if (sc.N < 1) fail(f.at("N"), "must be >= 1");
        sc.initial_mode = parse_initial_mode(f.string("initial_mode", std::string("multinomial")), f.at("initial_mode"));
        f.finish();
    }

    if (const json* s = top.find("integrator")) {
        Fields f(*s, "integrator");
        const std::string kind = f.string("kind", std::string("auto"));
        if (kind == "auto") sc.integration.integrator = IntegratorKind::Auto;
        else if (kind == "rk4") sc.integration.integrator = IntegratorKind::RK4;
        else if (kind == "exponential") sc.integration.integrator = IntegratorKind::Exponential;
        else fail(f.at("kind"), "expected 'auto', 'rk4' or 'exponential'");
        sc.integration.dt = f.nonneg("dt", 0.0);
        f.finish();
    }
    if (sc.integration.integrator == IntegratorKind::Exponential && sc.grid.boundary() != Boundary::Neumann)
        fail("integrator.kind", "the exponential integrator needs a Neumann grid");
    sc.integration.sample_intervals = sc.sample_count;

    if (const json* s = top.find("study")) {
        Fields f(*s, "study");
        StudyConfig& st = sc.study;
        if (const json* v = f.find("inv_eps_list"))
            for (long long x : integer_list(*v, f.at("inv_eps_list"))) {
                if (x < 1) fail(f.at("inv_eps_list"), "entries must be positive");
                st.inv_eps_list.push_back(static_cast<int>(x));
            }
        st.inv_eps_ref = static_cast<int>(f.integer("inv_eps_ref", 0));
        if (st.inv_eps_ref < 0) fail(f.at("inv_eps_ref"), "must be positive");
        if (const json* v = f.find("N_list"))
            for (long long x : integer_list(*v, f.at("N_list"))) {
                if (x < 1) fail(f.at("N_list"), "entries must be >= 1");
                st.N_list.push_back(x);
            }
        st.replicas = static_cast<int>(f.integer("replicas", 50));
        st.martingale_replicas = static_cast<int>(f.integer("martingale_replicas", 200));
        if (st.replicas < 1) fail(f.at("replicas"), "must be >= 1");
        if (st.martingale_replicas < 1) fail(f.at("martingale_replicas"), "must be >= 1");
        if (const json* v = f.find("schedule")) {
            if (!v->is_array()) fail(f.at("schedule"), "expected an array of {inv_eps, N} objects");
            for (std::size_t k = 0; k < v->size(); ++k) {
                Fields e((*v)[k], f.at("schedule") + "[" + std::to_string(k) + "]");
                ScheduleEntry entry;
                entry.inv_eps = static_cast<int>(e.integer("inv_eps"));
                entry.N = e.integer("N");
                entry.replicas = static_cast<int>(e.integer("replicas", st.replicas));
                if (entry.inv_eps < 1) fail(e.at("inv_eps"), "must be positive");
                if (entry.N < 1) fail(e.at("N"), "must be >= 1");
                if (entry.replicas < 1) fail(e.at("replicas"), "must be >= 1");
                e.finish();
                st.schedule.push_back(entry);
            }
        }
        st.dense_count = static_cast<int>(f.integer("dense_count", 256));
        if (st.dense_count < 1) fail(f.at("dense_count"), "must be positive");
        const std::string quad = f.string("quadrature", std::string("trapezoid"));
        if (quad == "trapezoid") st.quadrature = CompensatorQuadrature::Trapezoid;
        else if (quad == "exact") st.quadrature = CompensatorQuadrature::Exact;
        else fail(f.at("quadrature"), "expected 'trapezoid' or 'exact'");
        if (const json* t = f.find("thresholds")) {
            Fields th(*t, f.at("thresholds"));
            st.thresholds.final_error = th.nonneg("final_error", st.thresholds.final_error);
            st.thresholds.slope_target = th.number("slope_target", st.thresholds.slope_target);
            st.thresholds.slope_tolerance = th.nonneg("slope_tolerance", st.thresholds.slope_tolerance);
            th.finish();
        }
        f.finish();
    }

    top.finish();
    sc.canonical = root.dump();
    sc.hash = fnv1a(sc.canonical);
    return sc;
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view source) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string(source) + ": " + e.what());
    }
    try {
        return build(root, source);
    } catch (const ScenarioError& e) {
        throw ScenarioError(std::string(source) + ": " + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string describe(const Scenario& sc) {
    std::ostringstream os;
    os << std::setprecision(10);
    if (!sc.name.empty()) os << "name:          " << sc.name << "\n";
    os << "grid:          " << sc.grid.describe() << "\n";
    os << "beta:          " << sc.params.beta.describe() << "\n";
    os << "alpha:         " << sc.params.alpha.describe() << "\n";
    os << "mu (S, I, R):  " << sc.params.mu_S << ", " << sc.params.mu_I << ", " << sc.params.mu_R << "\n";
    os << "s0:            " << sc.initial.s0.describe() << "\n";
    os << "i0:            " << sc.initial.i0.describe() << "\n";
    os << "r0:            " << sc.initial.r0.describe() << "\n";
    os << "normalization: factor " << sc.normalization_factor << " applied to (s0, i0, r0)\n";
    os << "horizon:       " << sc.horizon << " (" << sc.sample_count << " sample intervals"
       << (sc.dense ? ", dense" : "") << ")\n";
    os << "stochastic:    N = " << sc.N << ", initial "
       << (sc.initial_mode == InitialMode::Multinomial ? "multinomial" : "rounded") << "\n";
    os << "hash:          " << hash_hex(sc.hash) << "\n";
    return os.str();
}

ExperimentPlan make_plan(const Scenario& sc, ExperimentKind kind, std::uint64_t seed, int replicas,
                         unsigned threads) {
    ExperimentPlan plan;
    plan.kind = kind;
    plan.params = sc.params;
    plan.initial = sc.initial;
    plan.dim = sc.grid.dim();
    plan.boundary = sc.grid.boundary();
    plan.horizon = sc.horizon;
    plan.seed = seed;
    plan.sample_intervals = sc.sample_count;
    plan.initial_mode = sc.initial_mode;
    plan.quadrature = sc.study.quadrature;
    plan.integration = sc.integration;
    plan.threads = threads;
    plan.inv_eps_ref = sc.study.inv_eps_ref;

    const auto need = [](bool ok, const char* what) {
        if (!ok) throw ScenarioError(std::string("scenario study block lacks ") + what);
    };
    switch (kind) {
        case ExperimentKind::DiscretizationStudy:
            need(!sc.study.inv_eps_list.empty(), "inv_eps_list");
            need(sc.study.inv_eps_ref > 0, "inv_eps_ref");
            for (int inv : sc.study.inv_eps_list) plan.schedule.push_back({inv, 0, 0});
            break;
        case ExperimentKind::FixedEpsLLN:
        case ExperimentKind::MartingaleDecay: {
            need(!sc.study.N_list.empty(), "N_list");
            const bool mart = kind == ExperimentKind::MartingaleDecay;
            const int r = replicas > 0 ? replicas : (mart ? sc.study.martingale_replicas : sc.study.replicas);
            for (Count n : sc.study.N_list) plan.schedule.push_back({sc.grid.inv_eps(), n, r});
            if (mart) plan.sample_intervals = sc.study.dense_count;
            break;
        }
        case ExperimentKind::JointSupNormLLN:
            need(!sc.study.schedule.empty(), "schedule");
            plan.schedule = sc.study.schedule;
            if (replicas > 0)
                for (auto& e : plan.schedule) e.replicas = replicas;
            break;
    }
    return plan;
}

}  // namespace sirlab
