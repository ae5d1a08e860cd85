#include "atm/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "atm/errors.hpp"
#include "atm/expression.hpp"

namespace atm {
namespace {

namespace pt = boost::property_tree;

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// "name(a, b, c)" -> {"name", {"a", "b", "c"}}; commas inside nested
/// parentheses do not split.
struct Call {
    std::string name;
    std::vector<std::string> args;
};

std::optional<Call> parse_call(const std::string& text) {
    const std::string s = trim(text);
    const auto open = s.find('(');
    if (open == std::string::npos) {
        if (s.empty()) return std::nullopt;
        return Call{lower(s), {}};
    }
    if (s.back() != ')') return std::nullopt;
    Call c{lower(trim(s.substr(0, open))), {}};
    int depth = 0;
    std::string cur;
    for (std::size_t i = open + 1; i + 1 < s.size(); ++i) {
        const char ch = s[i];
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (depth < 0) return std::nullopt;
        if (ch == ',' && depth == 0) {
            c.args.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (depth != 0) return std::nullopt;
    if (!trim(cur).empty() || !c.args.empty()) c.args.push_back(trim(cur));
    return c;
}

// ---------------------------------------------------------------------------
// Config reading
// ---------------------------------------------------------------------------

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"", {"seed"}},
        {"problem",
         {"type", "l1", "l2", "cells", "cells1", "cells2", "coefficient", "initial", "velocity", "forcing", "horizon"}},
        {"scheme", {"kind", "sigma", "tau", "tau_ratio", "steps", "wavefront", "startup"}},
        {"study",
         {"type", "taus", "target_order", "order_band", "compare", "ratio_target", "ratio_band", "epsilon",
          "tolerance", "identity_tolerance", "ratios", "probe_steps", "growth_window", "bracket_tolerance"}},
        {"output", {"csv", "verbosity", "energy"}},
    };
    return keys;
}

/// Maps "section.key" to the line it was defined on, for diagnostics.
std::map<std::string, int> key_lines(const std::string& text) {
    std::map<std::string, int> lines;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(t.substr(0, eq));
        lines.emplace(section.empty() ? key : section + "." + key, n);
    }
    return lines;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::map<std::string, int> lines) : tree_(tree), lines_(std::move(lines)) {}

    int line_of(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

    std::optional<std::string> raw(const std::string& key) const {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) return std::nullopt;
        std::string s = *v;
        // Inline comments after the value.
        for (const char* marker : {" #", "\t#", " ;", "\t;"}) {
            const auto pos = s.find(marker);
            if (pos != std::string::npos) s = s.substr(0, pos);
        }
        return trim(s);
    }

    [[noreturn]] void bad(const std::string& key, const std::string& what) const {
        std::ostringstream msg;
        msg << "line " << line_of(key) << ": " << key << ": " << what;
        throw ConfigError(msg.str(), line_of(key), {key});
    }

    double number(const std::string& key, const std::string& text) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
        } catch (const std::exception&) {
        }
        bad(key, "expected a number, got '" + text + "'");
    }

    long long integer(const std::string& key, const std::string& text) const {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(text, &used);
            if (trim(text.substr(used)).empty()) return v;
        } catch (const std::exception&) {
        }
        bad(key, "expected an integer, got '" + text + "'");
    }

    std::optional<double> get_double(const std::string& key) const {
        const auto r = raw(key);
        if (!r) return std::nullopt;
        return number(key, *r);
    }

    std::optional<int> get_int(const std::string& key) const {
        const auto r = raw(key);
        if (!r) return std::nullopt;
        const long long v = integer(key, *r);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(key, "out of range");
        return static_cast<int>(v);
    }

    std::optional<bool> get_bool(const std::string& key) const {
        const auto r = raw(key);
        if (!r) return std::nullopt;
        const std::string v = lower(*r);
        if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
        if (v == "false" || v == "no" || v == "off" || v == "0") return false;
        bad(key, "expected true or false, got '" + *r + "'");
    }

    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        const auto r = raw(key);
        if (!r) return out;
        std::stringstream ss(*r);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) continue;
            out.push_back(number(key, t));
        }
        return out;
    }

    const pt::ptree& tree() const noexcept { return tree_; }

private:
    const pt::ptree& tree_;
    std::map<std::string, int> lines_;
};

void check_unknown_keys(const Reader& r) {
    const auto& known = known_keys();
    std::vector<std::string> unknown;
    for (const auto& [name, node] : r.tree()) {
        if (node.empty()) {
            if (!known.at("").count(name)) unknown.push_back(name);
            continue;
        }
        const auto section = known.find(name);
        for (const auto& [key, leaf] : node) {
            if (section == known.end() || !section->second.count(key)) unknown.push_back(name + "." + key);
        }
    }
    if (!unknown.empty()) {
        std::ostringstream msg;
        msg << "unknown keys:";
        for (const auto& k : unknown) msg << ' ' << k << " (line " << r.line_of(k) << ")";
        throw ConfigError(msg.str(), r.line_of(unknown.front()), unknown);
    }
}

double arg_number(const Reader& r, const std::string& key, const Call& c, std::size_t i) {
    return r.number(key, c.args.at(i));
}

int arg_int(const Reader& r, const std::string& key, const Call& c, std::size_t i) {
    return static_cast<int>(r.integer(key, c.args.at(i)));
}

void require_args(const Reader& r, const std::string& key, const Call& c, std::size_t lo, std::size_t hi) {
    if (c.args.size() < lo || c.args.size() > hi) {
        std::ostringstream msg;
        msg << c.name << " takes " << lo;
        if (hi != lo) msg << " to " << hi;
        msg << " arguments, got " << c.args.size();
        r.bad(key, msg.str());
    }
}

void check_expression(const Reader& r, const std::string& key, const std::string& text) {
    try {
        Expression e(text);
        (void)e;
    } catch (const ExpressionError& e) {
        r.bad(key, e.what());
    }
}

CoefficientSpec read_coefficient(const Reader& r) {
    const std::string key = "problem.coefficient";
    CoefficientSpec spec;
    const auto text = r.raw(key);
    if (!text) return spec;
    const auto c = parse_call(*text);
    if (!c) r.bad(key, "malformed value '" + *text + "'");
    if (c->name == "constant") {
        require_args(r, key, *c, 1, 1);
        spec.kind = CoefficientSpec::Kind::constant;
        spec.k_lower = spec.k_upper = arg_number(r, key, *c, 0);
    } else if (c->name == "checkerboard") {
        require_args(r, key, *c, 2, 3);
        spec.kind = CoefficientSpec::Kind::checkerboard;
        spec.k_lower = arg_number(r, key, *c, 0);
        spec.k_upper = arg_number(r, key, *c, 1);
        if (c->args.size() == 3) spec.blocks = arg_int(r, key, *c, 2);
        if (spec.blocks < 1) r.bad(key, "checkerboard needs at least one block");
    } else if (c->name == "expression") {
        require_args(r, key, *c, 3, 3);
        spec.kind = CoefficientSpec::Kind::expression;
        spec.expression = c->args[0];
        check_expression(r, key, spec.expression);
        spec.k_lower = arg_number(r, key, *c, 1);
        spec.k_upper = arg_number(r, key, *c, 2);
    } else {
        r.bad(key, "expected constant(k), checkerboard(k_lower, k_upper[, blocks]) or expression(expr, k_lower, "
                   "k_upper)");
    }
    if (!(spec.k_lower > 0.0) || spec.k_lower > spec.k_upper) r.bad(key, "bounds must satisfy 0 < k_lower <= k_upper");
    return spec;
}

DataSpec read_data(const Reader& r, const std::string& key) {
    DataSpec spec;
    const auto text = r.raw(key);
    if (!text) return spec;
    const auto c = parse_call(*text);
    if (!c) r.bad(key, "malformed value '" + *text + "'");
    if (c->name == "zero") {
        require_args(r, key, *c, 0, 0);
    } else if (c->name == "mode") {
        require_args(r, key, *c, 2, 3);
        spec.kind = DataSpec::Kind::mode;
        spec.m1 = arg_int(r, key, *c, 0);
        spec.m2 = arg_int(r, key, *c, 1);
        spec.amplitude = c->args.size() == 3 ? arg_number(r, key, *c, 2) : 1.0;
        if (spec.m1 < 1 || spec.m2 < 1) r.bad(key, "mode numbers must be positive");
    } else if (c->name == "random") {
        require_args(r, key, *c, 0, 1);
        spec.kind = DataSpec::Kind::random;
        spec.amplitude = c->args.empty() ? 1.0 : arg_number(r, key, *c, 0);
    } else if (c->name == "expression") {
        require_args(r, key, *c, 1, 1);
        spec.kind = DataSpec::Kind::expression;
        spec.expression = c->args[0];
        check_expression(r, key, spec.expression);
    } else {
        r.bad(key, "expected zero, mode(m1, m2[, amplitude]), random([amplitude]) or expression(expr)");
    }
    return spec;
}

ForcingSpec read_forcing(const Reader& r) {
    const std::string key = "problem.forcing";
    ForcingSpec spec;
    const auto text = r.raw(key);
    if (!text) return spec;
    const auto c = parse_call(*text);
    if (!c) r.bad(key, "malformed value '" + *text + "'");
    if (c->name == "zero") {
        require_args(r, key, *c, 0, 0);
    } else if (c->name == "mode-exp" || c->name == "mode-cos") {
        require_args(r, key, *c, 4, 4);
        spec.kind = c->name == "mode-exp" ? ForcingSpec::Kind::mode_exp : ForcingSpec::Kind::mode_cos;
        spec.m1 = arg_int(r, key, *c, 0);
        spec.m2 = arg_int(r, key, *c, 1);
        spec.amplitude = arg_number(r, key, *c, 2);
        spec.rate = arg_number(r, key, *c, 3);
        if (spec.m1 < 1 || spec.m2 < 1) r.bad(key, "mode numbers must be positive");
    } else if (c->name == "expression") {
        require_args(r, key, *c, 1, 1);
        spec.kind = ForcingSpec::Kind::expression;
        spec.expression = c->args[0];
        check_expression(r, key, spec.expression);
    } else {
        r.bad(key, "expected zero, mode-exp(m1, m2, a, b), mode-cos(m1, m2, a, omega) or expression(expr)");
    }
    return spec;
}

void validate(const ExperimentConfig& c, const Reader& r) {
    std::vector<std::pair<std::string, std::vector<std::string>>> errors;
    auto fail = [&](std::string what, std::vector<std::string> keys) { errors.emplace_back(std::move(what), keys); };

    const bool hyperbolic = c.equation == Equation::hyperbolic;
    if (hyperbolic != (c.kind == SchemeKind::hyperbolic_atm)) {
        fail("problem type and scheme kind disagree (hyperbolic problems use hyperbolic-atm)",
             {"problem.type", "scheme.kind"});
    }
    if (!hyperbolic && c.velocity.kind != DataSpec::Kind::zero) {
        fail("velocity is only meaningful for hyperbolic problems", {"problem.velocity", "problem.type"});
    }
    if (!(c.l1 > 0.0) || !(c.l2 > 0.0)) fail("side lengths must be positive", {"problem.l1", "problem.l2"});
    if (c.cells1 < 2 || c.cells2 < 2) fail("need at least 2 cells per direction", {"problem.cells1", "problem.cells2"});
    if (!(c.sigma >= 0.0)) fail("sigma must be nonnegative", {"scheme.sigma"});
    if (c.tau && !(*c.tau > 0.0)) fail("tau must be positive", {"scheme.tau"});
    if (c.tau_ratio && !(*c.tau_ratio > 0.0)) fail("tau_ratio must be positive", {"scheme.tau_ratio"});
    if (c.horizon && !(*c.horizon > 0.0)) fail("horizon must be positive", {"problem.horizon"});
    if (c.steps && *c.steps < 1) fail("steps must be positive", {"scheme.steps"});

    switch (c.study) {
        case StudyKind::none:
        case StudyKind::energy: {
            if (c.tau.has_value() == c.tau_ratio.has_value()) {
                fail("give exactly one of tau and tau_ratio", {"scheme.tau", "scheme.tau_ratio"});
            }
            if (c.horizon.has_value() == c.steps.has_value()) {
                fail("give exactly one of problem.horizon and scheme.steps", {"problem.horizon", "scheme.steps"});
            }
            if (c.tau_ratio && c.horizon) {
                fail("a tau_ratio run is sized by scheme.steps, not problem.horizon",
                     {"scheme.tau_ratio", "problem.horizon"});
            }
            if (c.tau && c.horizon && *c.tau > 0.0 && *c.horizon > 0.0) {
                const double n = std::round(*c.horizon / *c.tau);
                if (std::abs(n * *c.tau - *c.horizon) > 1e-12 * *c.horizon) {
                    fail("horizon is not an integer multiple of tau", {"problem.horizon", "scheme.tau"});
                }
            }
            if (c.study == StudyKind::energy && !(c.epsilon > 0.0 && c.epsilon < 1.0)) {
                fail("epsilon must lie in (0, 1)", {"study.epsilon"});
            }
            break;
        }
        case StudyKind::convergence: {
            if (c.taus.empty()) fail("convergence study needs a non-empty tau list", {"study.taus"});
            for (double t : c.taus) {
                if (!(t > 0.0)) fail("time steps must be positive", {"study.taus"});
            }
            if (!c.horizon) fail("convergence study needs a horizon", {"problem.horizon"});
            if (c.horizon) {
                for (double t : c.taus) {
                    if (!(t > 0.0)) continue;
                    const double n = std::round(*c.horizon / t);
                    if (std::abs(n * t - *c.horizon) > 1e-12 * *c.horizon) {
                        fail("horizon is not an integer multiple of every tau", {"problem.horizon", "study.taus"});
                        break;
                    }
                }
            }
            if (c.coefficient.kind != CoefficientSpec::Kind::constant) {
                fail("convergence studies need a constant coefficient", {"problem.coefficient"});
            }
            std::optional<std::pair<int, int>> mode;
            auto use_mode = [&](int m1, int m2, const char* key) {
                if (mode && *mode != std::make_pair(m1, m2)) fail("data must share one eigenmode", {key});
                mode = std::make_pair(m1, m2);
            };
            if (c.initial.kind == DataSpec::Kind::mode) use_mode(c.initial.m1, c.initial.m2, "problem.initial");
            else if (c.initial.kind != DataSpec::Kind::zero) fail("initial data must be zero or mode(...)", {"problem.initial"});
            if (c.velocity.kind == DataSpec::Kind::mode) use_mode(c.velocity.m1, c.velocity.m2, "problem.velocity");
            else if (c.velocity.kind != DataSpec::Kind::zero) fail("velocity must be zero or mode(...)", {"problem.velocity"});
            if (c.forcing.kind == ForcingSpec::Kind::mode_exp || c.forcing.kind == ForcingSpec::Kind::mode_cos) {
                use_mode(c.forcing.m1, c.forcing.m2, "problem.forcing");
            } else if (c.forcing.kind != ForcingSpec::Kind::zero) {
                fail("forcing must be zero, mode-exp(...) or mode-cos(...)", {"problem.forcing"});
            }
            if (mode && (mode->first >= c.cells1 || mode->second >= c.cells2)) {
                fail("eigenmode is not resolved by the grid", {"problem.initial", "problem.cells1", "problem.cells2"});
            }
            if (c.compare_kind && (*c.compare_kind == SchemeKind::hyperbolic_atm) != hyperbolic) {
                fail("comparison scheme must solve the same problem type", {"study.compare", "problem.type"});
            }
            break;
        }
        case StudyKind::stability: {
            if (c.kind != SchemeKind::explicit_euler) fail("stability probe applies to the explicit scheme", {"scheme.kind", "study.type"});
            if (c.ratios.empty()) fail("stability probe needs a non-empty ratio list", {"study.ratios"});
            for (double v : c.ratios) {
                if (!(v > 0.0)) fail("ratios must be positive", {"study.ratios"});
            }
            if (c.probe_steps < 1 || c.growth_window < 1) fail("probe steps must be positive", {"study.probe_steps", "study.growth_window"});
            break;
        }
    }
    if (c.compare_kind && c.study != StudyKind::convergence) fail("compare only applies to convergence studies", {"study.compare"});

    if (errors.empty()) return;
    std::ostringstream msg;
    std::vector<std::string> keys;
    msg << "invalid configuration:";
    for (const auto& [what, ks] : errors) {
        msg << "\n  " << what << " [";
        for (std::size_t i = 0; i < ks.size(); ++i) {
            msg << (i ? ", " : "") << ks[i];
            if (const int line = r.line_of(ks[i])) msg << " (line " << line << ")";
            if (std::find(keys.begin(), keys.end(), ks[i]) == keys.end()) keys.push_back(ks[i]);
        }
        msg << "]";
    }
    throw ConfigError(msg.str(), 0, keys);
}

// ---------------------------------------------------------------------------
// Problem assembly
// ---------------------------------------------------------------------------

Grid make_grid(const ExperimentConfig& c) { return Grid(c.l1, c.l2, c.cells1, c.cells2); }

SpaceField mode_field(const Grid& g, int m1, int m2, double amplitude) {
    return [=](double x1, double x2) {
        return amplitude * std::sin(m1 * std::numbers::pi * x1 / g.l1()) * std::sin(m2 * std::numbers::pi * x2 / g.l2());
    };
}

SpaceField make_data(const DataSpec& spec, const Grid& g, std::uint64_t seed, std::uint64_t stream) {
    switch (spec.kind) {
        case DataSpec::Kind::zero: return {};
        case DataSpec::Kind::mode: return mode_field(g, spec.m1, spec.m2, spec.amplitude);
        case DataSpec::Kind::random: {
            std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * stream));
            std::uniform_real_distribution<double> u(-spec.amplitude, spec.amplitude);
            auto table = std::make_shared<std::vector<double>>(g.size());
            for (double& v : *table) v = u(rng);
            return [g, table](double x1, double x2) {
                const auto i1 = static_cast<int>(std::llround(x1 / g.h1()));
                const auto i2 = static_cast<int>(std::llround(x2 / g.h2()));
                if (i1 < 1 || i2 < 1 || i1 > g.n1() || i2 > g.n2()) return 0.0;
                return (*table)[g.index(i1, i2)];
            };
        }
        case DataSpec::Kind::expression: {
            const Expression e(spec.expression);
            return [e](double x1, double x2) { return e(x1, x2, 0.0); };
        }
    }
    return {};
}

SpaceTimeField make_forcing(const ForcingSpec& spec, const Grid& g) {
    switch (spec.kind) {
        case ForcingSpec::Kind::zero: return {};
        case ForcingSpec::Kind::mode_exp:
        case ForcingSpec::Kind::mode_cos: {
            const SpaceField shape = mode_field(g, spec.m1, spec.m2, 1.0);
            const ModeForcing f{spec.kind == ForcingSpec::Kind::mode_exp ? ModeForcing::Kind::exponential
                                                                         : ModeForcing::Kind::cosine,
                                spec.amplitude, spec.rate};
            return [shape, f](double x1, double x2, double t) { return f(t) * shape(x1, x2); };
        }
        case ForcingSpec::Kind::expression: {
            const Expression e(spec.expression);
            return [e](double x1, double x2, double t) { return e(x1, x2, t); };
        }
    }
    return {};
}

struct Resolved {
    Coefficient coefficient;
    double tau;
    int steps;
    double horizon;
};

Resolved resolve(const ExperimentConfig& c) {
    Coefficient k = make_coefficient(c);
    const double tau = resolve_tau(c, k);
    int steps = 0;
    double horizon = 0.0;
    if (c.steps) {
        steps = *c.steps;
        horizon = steps * tau;
    } else {
        horizon = *c.horizon;
        steps = static_cast<int>(std::llround(horizon / tau));
    }
    return {std::move(k), tau, steps, horizon};
}

SchemeConfig scheme_config(const ExperimentConfig& c, const Resolved& r) {
    SchemeConfig s;
    s.kind = c.kind;
    s.sigma = c.sigma;
    s.tau = r.tau;
    s.steps = r.steps;
    s.order = c.wavefront ? SweepOrder::wavefront : SweepOrder::lexicographic;
    s.startup = c.startup;
    return s;
}

ParabolicProblem parabolic_problem(const ExperimentConfig& c, const Resolved& r) {
    const Grid g = r.coefficient.grid();
    return {r.coefficient, make_forcing(c.forcing, g), make_data(c.initial, g, c.seed, 1), r.horizon};
}

HyperbolicProblem hyperbolic_problem(const ExperimentConfig& c, const Resolved& r) {
    const Grid g = r.coefficient.grid();
    return {r.coefficient, make_forcing(c.forcing, g), make_data(c.initial, g, c.seed, 1),
            make_data(c.velocity, g, c.seed, 2), r.horizon};
}

EigenmodeProblem eigenmode_problem(const ExperimentConfig& c) {
    EigenmodeProblem p{make_coefficient(c), c.equation, 1, 1, 0.0, 0.0, ModeForcing{}, *c.horizon};
    if (c.initial.kind == DataSpec::Kind::mode) {
        p.m1 = c.initial.m1;
        p.m2 = c.initial.m2;
        p.initial_amplitude = c.initial.amplitude;
    }
    if (c.velocity.kind == DataSpec::Kind::mode) {
        p.m1 = c.velocity.m1;
        p.m2 = c.velocity.m2;
        p.velocity_amplitude = c.velocity.amplitude;
    }
    if (c.forcing.kind == ForcingSpec::Kind::mode_exp || c.forcing.kind == ForcingSpec::Kind::mode_cos) {
        p.m1 = c.forcing.m1;
        p.m2 = c.forcing.m2;
        p.forcing = {c.forcing.kind == ForcingSpec::Kind::mode_exp ? ModeForcing::Kind::exponential
                                                                   : ModeForcing::Kind::cosine,
                     c.forcing.amplitude, c.forcing.rate};
    }
    return p;
}

void echo_header(std::ostream& csv, const ExperimentConfig& c, const std::string& command) {
    csv << kCsvHeader << '\n';
    csv << "# command=" << command << " scheme=" << to_string(c.kind) << " sigma=" << num(c.sigma) << '\n';
}

std::ostream& summary_of(const CommandOutput& out) {
    static std::ostringstream sink;
    if (out.summary) return *out.summary;
    sink.str({});
    return sink;
}

void print_warnings(const ExperimentConfig& c, const std::vector<std::string>& warnings, std::ostream& s) {
    if (c.verbosity == Verbosity::quiet) return;
    for (const auto& w : warnings) s << "warning: " << w << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(std::istream& in) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    pt::ptree tree;
    try {
        std::istringstream stream(text);
        pt::ini_parser::read_ini(stream, tree);
    } catch (const pt::ini_parser_error& e) {
        std::ostringstream msg;
        msg << "line " << e.line() << ": " << e.message();
        throw ConfigError(msg.str(), static_cast<int>(e.line()));
    }
    const Reader r(tree, key_lines(text));
    check_unknown_keys(r);

    ExperimentConfig c;
    if (const auto s = r.raw("seed")) {
        const long long v = r.integer("seed", *s);
        if (v < 0) r.bad("seed", "seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(v);
    }

    if (const auto t = r.raw("problem.type")) {
        const std::string v = lower(*t);
        if (v == "parabolic") c.equation = Equation::parabolic;
        else if (v == "hyperbolic") c.equation = Equation::hyperbolic;
        else r.bad("problem.type", "expected parabolic or hyperbolic");
    }
    c.l1 = r.get_double("problem.l1").value_or(c.l1);
    c.l2 = r.get_double("problem.l2").value_or(c.l2);
    if (const auto n = r.get_int("problem.cells")) c.cells1 = c.cells2 = *n;
    c.cells1 = r.get_int("problem.cells1").value_or(c.cells1);
    c.cells2 = r.get_int("problem.cells2").value_or(c.cells2);
    c.coefficient = read_coefficient(r);
    c.initial = read_data(r, "problem.initial");
    c.velocity = read_data(r, "problem.velocity");
    c.forcing = read_forcing(r);
    c.horizon = r.get_double("problem.horizon");

    if (const auto k = r.raw("scheme.kind")) {
        try {
            c.kind = parse_scheme_kind(lower(*k));
        } catch (const std::invalid_argument&) {
            r.bad("scheme.kind", "expected explicit, atm, mlatm or hyperbolic-atm");
        }
    } else if (c.equation == Equation::hyperbolic) {
        c.kind = SchemeKind::hyperbolic_atm;
    }
    c.sigma = r.get_double("scheme.sigma").value_or(c.sigma);
    c.tau = r.get_double("scheme.tau");
    c.tau_ratio = r.get_double("scheme.tau_ratio");
    c.steps = r.get_int("scheme.steps");
    c.wavefront = r.get_bool("scheme.wavefront").value_or(false);
    if (const auto s = r.raw("scheme.startup")) {
        if (lower(*s) != "atm") r.bad("scheme.startup", "only 'atm' startup is available");
    }

    if (const auto s = r.raw("study.type")) {
        const std::string v = lower(*s);
        if (v == "none") c.study = StudyKind::none;
        else if (v == "convergence") c.study = StudyKind::convergence;
        else if (v == "stability") c.study = StudyKind::stability;
        else if (v == "energy") c.study = StudyKind::energy;
        else r.bad("study.type", "expected none, convergence, stability or energy");
    }
    c.taus = r.get_list("study.taus");
    c.target_order = r.get_double("study.target_order");
    c.order_band = r.get_double("study.order_band").value_or(c.order_band);
    if (const auto k = r.raw("study.compare")) {
        try {
            c.compare_kind = parse_scheme_kind(lower(*k));
        } catch (const std::invalid_argument&) {
            r.bad("study.compare", "expected explicit, atm, mlatm or hyperbolic-atm");
        }
    }
    c.ratio_target = r.get_double("study.ratio_target").value_or(c.ratio_target);
    c.ratio_band = r.get_double("study.ratio_band").value_or(c.ratio_band);
    c.epsilon = r.get_double("study.epsilon").value_or(c.epsilon);
    c.tolerance = r.get_double("study.tolerance").value_or(c.tolerance);
    c.identity_tolerance = r.get_double("study.identity_tolerance").value_or(c.identity_tolerance);
    if (r.raw("study.ratios")) c.ratios = r.get_list("study.ratios");
    c.probe_steps = r.get_int("study.probe_steps").value_or(c.probe_steps);
    c.growth_window = r.get_int("study.growth_window").value_or(c.growth_window);
    c.bracket_tolerance = r.get_double("study.bracket_tolerance").value_or(c.bracket_tolerance);

    c.csv_path = r.raw("output.csv").value_or("");
    if (const auto v = r.raw("output.verbosity")) {
        const std::string s = lower(*v);
        if (s == "quiet") c.verbosity = Verbosity::quiet;
        else if (s == "normal") c.verbosity = Verbosity::normal;
        else if (s == "verbose") c.verbosity = Verbosity::verbose;
        else r.bad("output.verbosity", "expected quiet, normal or verbose");
    }
    c.energy = r.get_bool("output.energy").value_or(false);

    validate(c, r);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
    return parse_config(in);
}

Coefficient make_coefficient(const ExperimentConfig& c) {
    const Grid g = make_grid(c);
    const CoefficientSpec& s = c.coefficient;
    switch (s.kind) {
        case CoefficientSpec::Kind::constant: return Coefficient::constant(g, s.k_lower);
        case CoefficientSpec::Kind::checkerboard: {
            const double lo = s.k_lower, hi = s.k_upper;
            const int blocks = s.blocks;
            return Coefficient(
                g,
                [=](double x1, double x2) {
                    const auto b1 = static_cast<long long>(std::floor(blocks * x1 / g.l1()));
                    const auto b2 = static_cast<long long>(std::floor(blocks * x2 / g.l2()));
                    return (b1 + b2) % 2 == 0 ? lo : hi;
                },
                lo, hi);
        }
        case CoefficientSpec::Kind::expression: {
            const Expression e(s.expression);
            return Coefficient(g, [e](double x1, double x2) { return e(x1, x2, 0.0); }, s.k_lower, s.k_upper);
        }
    }
    throw std::logic_error("unhandled coefficient kind");
}

NormEstimateOptions norm_options(const ExperimentConfig& c) {
    NormEstimateOptions options;
    options.seed = c.seed;
    // Blocky coefficients cluster the top of the spectrum; 10k iterations
    // is not enough there.
    options.max_iterations = 200'000;
    return options;
}

double resolve_tau(const ExperimentConfig& c, const Coefficient& k) {
    if (c.tau) return *c.tau;
    if (!c.tau_ratio) throw ConfigError("no time step given", 0, {"scheme.tau", "scheme.tau_ratio"});
    return *c.tau_ratio * 2.0 / estimate_norm_A(k, norm_options(c));
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_run(const ExperimentConfig& c, const CommandOutput& out) {
    std::ostream& s = summary_of(out);
    const Resolved r = resolve(c);
    const SchemeConfig scheme = scheme_config(c, r);
    print_warnings(c, scheme.validate(r.horizon), s);

    const Coefficient& k = r.coefficient;
    if (out.csv) {
        echo_header(*out.csv, c, "run");
        *out.csv << "# tau=" << num(r.tau) << " steps=" << r.steps << '\n';
        *out.csv << "n,t,norm,norm_a" << (c.energy ? ",energy" : "") << '\n';
    }
    double initial_a = 0.0;
    double final_a = 0.0;
    const Observer writer = [&](const StepState& st) {
        const double a = std::sqrt(std::max(0.0, inner_product(apply_A(k, st.current), st.current)));
        if (st.level == 0) initial_a = a;
        final_a = a;
        if (!out.csv) return;
        *out.csv << st.level << ',' << num(st.time) << ',' << num(norm(st.current)) << ',' << num(a);
        if (c.energy) {
            *out.csv << ',';
            if (!is_three_level(c.kind)) *out.csv << num(a * a);
            else if (st.previous && c.kind == SchemeKind::mlatm) *out.csv << num(mlatm_energy(k, c.sigma, r.tau, st));
            else if (st.previous) *out.csv << num(hyperbolic_energy(k, c.sigma, r.tau, st));
        }
        *out.csv << '\n';
    };

    const RunResult result = c.equation == Equation::hyperbolic ? run(hyperbolic_problem(c, r), scheme, {writer})
                                                                : run(parabolic_problem(c, r), scheme, {writer});
    s << "run: scheme=" << to_string(c.kind) << " sigma=" << num(c.sigma) << " tau=" << num(r.tau)
      << " steps=" << r.steps;
    if (result.blow_up) {
        s << " status=blow-up level=" << result.blow_up->level << " t=" << num(result.blow_up->time) << '\n';
        return kExitViolation;
    }
    s << " final_norm=" << num(norm(result.final_state.current)) << " norm_a_initial=" << num(initial_a)
      << " norm_a_final=" << num(final_a) << " status=ok\n";
    return kExitOk;
}

int cmd_convergence(const ExperimentConfig& c, const CommandOutput& out) {
    std::ostream& s = summary_of(out);
    if (c.study != StudyKind::convergence) {
        throw ConfigError("the convergence command needs [study] type = convergence", 0, {"study.type"});
    }
    const EigenmodeProblem problem = eigenmode_problem(c);
    const SweepOrder order = c.wavefront ? SweepOrder::wavefront : SweepOrder::lexicographic;
    const ConvergenceTable table = time_order_study(c.kind, c.sigma, problem, c.taus, order);
    std::optional<ConvergenceTable> reference;
    if (c.compare_kind) reference = time_order_study(*c.compare_kind, c.sigma, problem, c.taus, order);

    if (out.csv) {
        echo_header(*out.csv, c, "convergence");
        if (c.compare_kind) *out.csv << "# compare=" << to_string(*c.compare_kind) << '\n';
        *out.csv << "h,tau,error_a,error_l2,order" << (reference ? ",ratio" : "") << '\n';
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const ConvergenceRow& row = table.rows[i];
            *out.csv << num(row.h) << ',' << num(row.tau) << ',' << num(row.error_a) << ',' << num(row.error_l2) << ','
                     << num(row.order);
            if (reference) {
                const double den = reference->rows[i].error_a;
                *out.csv << ',' << num(den > 0.0 ? row.error_a / den : std::nan(""));
            }
            *out.csv << '\n';
        }
    }

    bool ok = true;
    bool all_zero = true;
    for (const ConvergenceRow& row : table.rows) {
        if (row.blew_up) ok = false;
        if (row.error_a != 0.0) all_zero = false;
    }
    const double target = c.target_order.value_or(target_order(c.kind, c.sigma));
    s << "convergence: scheme=" << to_string(c.kind) << " sigma=" << num(c.sigma);
    if (all_zero && ok) {
        s << " fitted_order=undefined (all errors zero)";
    } else {
        const bool in_band = std::abs(table.fitted_order - target) <= c.order_band;
        ok = ok && in_band;
        s << " fitted_order=" << num(table.fitted_order) << " target=" << num(target) << " band=" << num(c.order_band)
          << (in_band ? " [pass]" : " [FAIL]");
    }
    if (reference) {
        const double ratio = error_ratio_order(table, *reference);
        const bool in_band = std::abs(ratio - c.ratio_target) <= c.ratio_band;
        ok = ok && in_band;
        s << " ratio_order=" << num(ratio) << " ratio_target=" << num(c.ratio_target)
          << (in_band ? " [pass]" : " [FAIL]");
    }
    s << '\n';
    return ok ? kExitOk : kExitViolation;
}

namespace {

int verify_stability(const ExperimentConfig& c, const CommandOutput& out, std::ostream& s) {
    const Coefficient k = make_coefficient(c);
    const Grid g = k.grid();
    const ParabolicProblem problem{k, make_forcing(c.forcing, g), make_data(c.initial, g, c.seed, 1), 1.0};
    StabilityProbeOptions options;
    options.steps = c.probe_steps;
    options.growth_window = c.growth_window;
    options.norm_estimate = norm_options(c);
    const StabilityReport report = stability_probe(problem, c.ratios, options);

    const bool top_mode = c.initial.kind == DataSpec::Kind::zero;
    bool ok = report.brackets_tau0(c.bracket_tolerance);
    for (const StabilityRun& run_r : report.runs) {
        if (run_r.ratio < 1.0 && !run_r.nonincreasing) ok = false;
        if (top_mode && run_r.ratio > 1.0 + c.bracket_tolerance && !run_r.unstable) ok = false;
    }
    if (out.csv) {
        echo_header(*out.csv, c, "verify-stability");
        *out.csv << "# norm_a=" << num(report.norm_a) << " tau0=" << num(report.tau0) << '\n';
        *out.csv << "ratio,tau,nonincreasing,growth,unstable\n";
        for (const StabilityRun& run_r : report.runs) {
            *out.csv << num(run_r.ratio) << ',' << num(run_r.tau) << ',' << (run_r.nonincreasing ? 1 : 0) << ','
                     << num(run_r.growth) << ',' << (run_r.unstable ? 1 : 0) << '\n';
        }
        *out.csv << "# bracket=" << num(report.stable_ratio) << ',' << num(report.unstable_ratio) << '\n';
    }
    s << "stability: norm_a=" << num(report.norm_a) << " tau0=" << num(report.tau0) << " bracket=["
      << num(report.stable_ratio) << ", " << num(report.unstable_ratio) << "]"
      << (ok ? " status=ok" : " status=violation") << '\n';
    return ok ? kExitOk : kExitViolation;
}

int verify_energy(const ExperimentConfig& c, const CommandOutput& out, std::ostream& s) {
    const Resolved r = resolve(c);
    const SchemeConfig scheme = scheme_config(c, r);
    print_warnings(c, scheme.validate(r.horizon), s);

    const ParabolicProblem parabolic = parabolic_problem(c, r);
    const HyperbolicProblem hyperbolic = hyperbolic_problem(c, r);
    std::unique_ptr<EnergyMonitor> monitor;
    switch (c.kind) {
        case SchemeKind::explicit_euler: monitor = std::make_unique<Theorem1Monitor>(parabolic, scheme, c.epsilon); break;
        case SchemeKind::atm: monitor = std::make_unique<Theorem2Monitor>(parabolic, scheme); break;
        case SchemeKind::mlatm: monitor = std::make_unique<Theorem3Monitor>(parabolic, scheme); break;
        case SchemeKind::hyperbolic_atm: monitor = std::make_unique<Theorem4Monitor>(hyperbolic, scheme); break;
    }
    const Observer observer = [&](const StepState& st) { (*monitor)(st); };
    const RunResult result = c.equation == Equation::hyperbolic ? run(hyperbolic, scheme, {observer})
                                                                : run(parabolic, scheme, {observer});
    const EnergyReport& report = monitor->report();
    const bool with_identity = c.kind == SchemeKind::hyperbolic_atm;

    if (out.csv) {
        echo_header(*out.csv, c, "verify-energy");
        *out.csv << "# tau=" << num(r.tau) << " steps=" << r.steps << " estimate=" << report.estimate << '\n';
        if (report.startup) {
            *out.csv << "# startup n=" << report.startup->level << " energy=" << num(report.startup->energy) << '\n';
        }
        *out.csv << "n,t,energy,bound,violation,relative_violation" << (with_identity ? ",identity_defect" : "") << '\n';
        for (const EnergyRecord& e : report.records) {
            *out.csv << e.level << ',' << num(e.time) << ',' << num(e.energy) << ',' << num(e.bound) << ','
                     << num(e.violation) << ',' << num(e.relative_violation);
            if (with_identity) *out.csv << ',' << num(e.identity_defect);
            *out.csv << '\n';
        }
    }

    bool ok = !result.blow_up && report.max_relative_violation <= c.tolerance;
    if (with_identity && report.max_identity_defect > c.identity_tolerance) ok = false;
    s << "verify: scheme=" << to_string(c.kind) << " sigma=" << num(c.sigma) << " tau=" << num(r.tau)
      << " steps=" << r.steps << " estimate=" << report.estimate
      << " max_relative_violation=" << num(report.max_relative_violation);
    if (with_identity) s << " max_identity_defect=" << num(report.max_identity_defect);
    if (result.blow_up) s << " blow-up level=" << result.blow_up->level;
    s << (ok ? " status=ok" : " status=violation") << '\n';
    return ok ? kExitOk : kExitViolation;
}

}  // namespace

int cmd_verify(const ExperimentConfig& c, const CommandOutput& out) {
    std::ostream& s = summary_of(out);
    switch (c.study) {
        case StudyKind::stability: return verify_stability(c, out, s);
        case StudyKind::energy: return verify_energy(c, out, s);
        default: break;
    }
    throw ConfigError("the verify command needs [study] type = energy or stability", 0, {"study.type"});
}

}  // namespace atm
