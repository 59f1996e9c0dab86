#include "pnls/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pnls {

namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be rejected with their full path.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(at(key), "missing required key");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }

    std::optional<double> opt_number(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    double number_or(const std::string& key, double fallback) { return opt_number(key).value_or(fallback); }

    long long integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<long long>();
    }

    long long integer_or(const std::string& key, long long fallback) {
        seen_.insert(key);
        return has(key) ? integer(key) : fallback;
    }

    bool boolean_or(const std::string& key, bool fallback) {
        seen_.insert(key);
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }

    std::string string_or(const std::string& key, const std::string& fallback) {
        seen_.insert(key);
        return has(key) ? string(key) : fallback;
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Coord coord(const std::string& key, int dim) {
        const auto v = numbers(key);
        if (static_cast<int>(v.size()) != dim) {
            throw ConfigError(at(key), "expected " + std::to_string(dim) + " components");
        }
        Coord c{};
        for (int a = 0; a < dim; ++a) c[a] = v[a];
        return c;
    }

    Coord coord_or_zero(const std::string& key, int dim) {
        seen_.insert(key);
        return has(key) ? coord(key, dim) : Coord{};
    }

    Reader object(const std::string& key) { return Reader(raw(key), at(key)); }

    void skip(const std::string& key) { seen_.insert(key); }
    const std::string& path() const { return path_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

GridConfig read_grid(Reader r, int dim) {
    GridConfig g;
    g.lower = r.numbers("lower");
    g.upper = r.numbers("upper");
    const json& nodes = r.raw("nodes");
    if (!nodes.is_array()) throw ConfigError(r.at("nodes"), "expected an array of integers");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].is_number_integer() || nodes[i].get<long long>() < 3) {
            throw ConfigError(r.at("nodes") + "/" + std::to_string(i), "expected an integer >= 3");
        }
        g.nodes.push_back(nodes[i].get<std::size_t>());
    }
    for (const char* key : {"lower", "upper", "nodes"}) {
        const std::size_t len = std::string(key) == "lower" ? g.lower.size()
                                : std::string(key) == "upper" ? g.upper.size()
                                                              : g.nodes.size();
        if (static_cast<int>(len) != dim) {
            throw ConfigError(r.at(key), "expected " + std::to_string(dim) + " components");
        }
    }
    for (int a = 0; a < dim; ++a) {
        if (!(g.upper[a] > g.lower[a])) throw ConfigError(r.at("upper") + "/" + std::to_string(a), "must exceed lower");
    }
    r.finish();
    return g;
}

CoefficientConfig read_coefficient(Reader r, int dim, bool is_gamma) {
    CoefficientConfig c;
    c.kind = r.string("kind");
    if (is_gamma) c.normalize = r.boolean_or("normalize", true);
    if (c.kind == "constant") {
        c.value = r.number("value");
        c.period = r.opt_number("period");
    } else if (c.kind == "cosine") {
        c.base = r.number("base");
        c.amplitude = r.number("amplitude");
        c.period = r.number("period");
        if (!(*c.period > 0.0)) throw ConfigError(r.at("period"), "must be positive");
        c.center = r.coord_or_zero("center", dim);
    } else if (c.kind == "gaussian_well") {
        c.base = r.number("base");
        c.depth = r.number("depth");
        c.width = r.number("width");
        if (!(c.width > 0.0)) throw ConfigError(r.at("width"), "must be positive");
        c.center = r.coord_or_zero("center", dim);
        c.period = r.opt_number("period");
    } else {
        throw ConfigError(r.at("kind"), "unknown coefficient kind '" + c.kind + "'");
    }
    r.finish();
    return c;
}

RegionConfig read_region(Reader r, int dim) {
    RegionConfig g;
    g.kind = r.string("kind");
    g.center = r.coord("center", dim);
    if (g.kind == "box") {
        g.half_widths = r.coord("half_widths", dim);
        for (int a = 0; a < dim; ++a) {
            if (!(g.half_widths[a] > 0.0)) throw ConfigError(r.at("half_widths"), "must be positive");
        }
    } else if (g.kind == "ball") {
        g.radius = r.number("radius");
        if (!(g.radius > 0.0)) throw ConfigError(r.at("radius"), "must be positive");
    } else {
        throw ConfigError(r.at("kind"), "unknown region kind '" + g.kind + "'");
    }
    g.band_width = r.opt_number("band_width");
    r.finish();
    return g;
}

NonlinearityConfig read_nonlinearity(Reader r) {
    NonlinearityConfig n;
    n.kind = r.string("kind");
    if (n.kind == "power") {
        n.q = r.number("q");
        if (!(n.q > 2.0)) throw ConfigError(r.at("q"), "must exceed 2");
    } else if (n.kind == "combined") {
        const json& terms = r.raw("terms");
        if (!terms.is_array() || terms.empty()) throw ConfigError(r.at("terms"), "expected a non-empty array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            Reader t(terms[i], r.at("terms") + "/" + std::to_string(i));
            const double c = t.number("coefficient");
            const double q = t.number("q");
            if (!(c > 0.0)) throw ConfigError(t.at("coefficient"), "must be positive");
            if (!(q > 2.0)) throw ConfigError(t.at("q"), "must exceed 2");
            t.finish();
            n.terms.push_back({c, q});
        }
    } else {
        throw ConfigError(r.at("kind"), "unknown nonlinearity kind '" + n.kind + "'");
    }
    n.theta = r.opt_number("theta");
    n.p = r.opt_number("p");
    r.finish();
    return n;
}

SolverParams read_solver(Reader r) {
    SolverParams s;
    s.max_outer = static_cast<int>(r.integer_or("max_outer", s.max_outer));
    s.tol_residual = r.number_or("tol_residual", s.tol_residual);
    s.step = r.number_or("step", s.step);
    s.cg_tol = r.number_or("cg_tol", s.cg_tol);
    s.cg_max = static_cast<int>(r.integer_or("cg_max", s.cg_max));
    const long long seed = r.integer_or("seed", 0);
    if (seed < 0) throw ConfigError(r.at("seed"), "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.starts = static_cast<int>(r.integer_or("starts", s.starts));
    s.backtrack = r.number_or("backtrack", s.backtrack);
    s.step_growth = r.number_or("step_growth", s.step_growth);
    s.conjugate = r.boolean_or("conjugate", s.conjugate);
    s.max_stretch = r.number_or("max_stretch", s.max_stretch);
    s.width_factor = r.number_or("width_factor", s.width_factor);
    const std::string pre = r.string_or("preconditioner", "auto");
    if (pre == "auto") s.preconditioner = Preconditioner::Auto;
    else if (pre == "jacobi") s.preconditioner = Preconditioner::Jacobi;
    else if (pre == "tridiagonal") s.preconditioner = Preconditioner::Tridiagonal;
    else throw ConfigError(r.at("preconditioner"), "expected auto, jacobi or tridiagonal");
    r.finish();
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.path(), e.what());
    }
    return s;
}

SweepOptions read_sweep(Reader r) {
    SweepOptions o;
    o.warm_start = r.boolean_or("warm_start", o.warm_start);
    o.b = r.opt_number("b");
    if (o.b && !(*o.b > 0.0)) throw ConfigError(r.at("b"), "must be positive");
    if (r.has("decay_window")) {
        const auto w = r.numbers("decay_window");
        if (w.size() != 2 || !(w[0] > 0.0 && w[1] > w[0])) {
            throw ConfigError(r.at("decay_window"), "expected [r1, r2] with 0 < r1 < r2");
        }
        o.decay_r1 = w[0];
        o.decay_r2 = w[1];
    } else {
        r.skip("decay_window");
    }
    o.level_band = r.number_or("level_band", o.level_band);
    if (!(o.level_band >= 0.0)) throw ConfigError(r.at("level_band"), "must be non-negative");
    r.finish();
    return o;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("malformed JSON: ") + e.what());
    }
    Reader r(doc, "");
    ScenarioConfig c;
    c.dimension = static_cast<int>(r.integer("dimension"));
    if (c.dimension < 1 || c.dimension > kMaxDim) throw ConfigError("/dimension", "must be 1 or 2");
    const int dim = c.dimension;
    c.box = read_grid(r.object("box"), dim);

    const std::string which = r.string("case");
    if (which == "lambda1") c.which = ConcentrationCase::Lambda1;
    else if (which == "lambda2") c.which = ConcentrationCase::Lambda2;
    else throw ConfigError("/case", "expected lambda1 or lambda2");
    c.anchor = r.coord("anchor", dim);

    c.V = read_coefficient(r.object("V"), dim, false);
    c.Gamma = read_coefficient(r.object("Gamma"), dim, true);
    c.region = read_region(r.object("region"), dim);
    c.nonlinearity = read_nonlinearity(r.object("nonlinearity"));

    if (r.has("penalization")) {
        Reader p = r.object("penalization");
        c.k = p.opt_number("k");
        c.alpha = p.opt_number("alpha");
        c.beta = p.opt_number("beta");
        if (c.alpha && !(*c.alpha > 0.0)) throw ConfigError("/penalization/alpha", "must be positive");
        p.finish();
    } else {
        r.skip("penalization");
    }

    if (r.has("hbar")) {
        c.hbar = r.numbers("hbar");
        for (std::size_t i = 0; i < c.hbar.size(); ++i) {
            if (!(c.hbar[i] > 0.0)) throw ConfigError("/hbar/" + std::to_string(i), "must be positive");
            if (i > 0 && !(c.hbar[i] < c.hbar[i - 1])) {
                throw ConfigError("/hbar/" + std::to_string(i), "hbar list must be strictly decreasing");
            }
        }
    } else {
        r.skip("hbar");
    }

    if (r.has("solver")) c.solver = read_solver(r.object("solver"));
    else r.skip("solver");
    if (r.has("limit")) c.limit = read_grid(r.object("limit"), dim);
    else r.skip("limit");
    if (r.has("sweep")) c.sweep = read_sweep(r.object("sweep"));
    else r.skip("sweep");
    c.output = r.string_or("output", c.output);
    r.finish();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

Coefficient make_coefficient(const CoefficientConfig& c, int dim) {
    Coefficient out;
    if (c.kind == "constant") out = Coefficient::constant(c.value);
    else if (c.kind == "cosine") out = Coefficient::cosine(dim, c.base, c.amplitude, *c.period, c.center);
    else out = Coefficient::gaussian_well(dim, c.base, c.depth, c.width, c.center);
    if (c.kind != "cosine" && c.period) out.period = c.period;
    return out;
}

}  // namespace

const PenalizedNonlinearity& Scenario::penalization() const {
    if (!pen) throw pen_error.value_or(ConfigError("/penalization", "penalization unavailable"));
    return *pen;
}

Scenario build_scenario(const ScenarioConfig& config) {
    Scenario s;
    s.config = config;
    const int dim = config.dimension;
    try {
        s.grid = make_grid(config.box.lower, config.box.upper, config.box.nodes);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/box", e.what());
    }

    ProblemInputs in;
    in.dim = dim;
    in.V = make_coefficient(config.V, dim);
    in.Gamma = make_coefficient(config.Gamma, dim);
    in.normalize_gamma = config.Gamma.normalize;
    in.alpha = config.alpha;
    in.beta = config.beta;
    in.which = config.which;
    in.anchor = config.anchor;
    try {
        in.region = config.region.kind == "box" ? Region::box(dim, config.region.center, config.region.half_widths)
                                                : Region::ball(dim, config.region.center, config.region.radius);
        in.region.require_inside(*s.grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/region", e.what());
    }
    try {
        const auto& n = config.nonlinearity;
        in.nonlinearity = n.kind == "power" ? Nonlinearity::power(n.q, n.theta, n.p)
                                            : Nonlinearity::combined(n.terms, n.theta, n.p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/nonlinearity", e.what());
    }
    if (!in.region.contains(in.anchor)) throw ConfigError("/anchor", "anchor must lie inside the region");
    try {
        s.problem = make_problem(in, *s.grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/", e.what());
    }

    const double theta = s.problem.nonlinearity.theta();
    if (!(theta > 2.0)) throw ConfigError("/nonlinearity/theta", "must exceed 2");
    const double k = config.k.value_or(PenalizedNonlinearity::default_k(theta));
    // Kept lenient so that `check` can still report the failing condition.
    try {
        s.pen.emplace(s.problem.nonlinearity, s.problem.alpha, k);
    } catch (const std::invalid_argument& e) {
        s.pen_error = ConfigError("/penalization", e.what());
    } catch (const std::runtime_error& e) {
        s.pen_error = ConfigError("/nonlinearity", e.what());
    }

    s.band_width = config.region.band_width.value_or(s.grid->max_spacing());
    try {
        s.discrete = DiscreteProblem::sample(s.problem, s.grid, s.band_width);
    } catch (const std::exception& e) {
        throw ConfigError("/region/band_width", e.what());
    }

    try {
        if (config.limit) {
            s.limit_grid = make_grid(config.limit->lower, config.limit->upper, config.limit->nodes);
        } else {
            std::vector<double> lo, hi;
            std::vector<std::size_t> nodes;
            for (int a = 0; a < dim; ++a) {
                lo.push_back(config.anchor[a] - 20.0);
                hi.push_back(config.anchor[a] + 20.0);
                nodes.push_back(dim == 1 ? 4096 : 128);
            }
            s.limit_grid = make_grid(lo, hi, nodes);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/limit", e.what());
    }
    return s;
}

}  // namespace pnls
